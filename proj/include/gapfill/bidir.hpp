#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gapfill/evo_search.hpp"
#include "gapfill/pipeline.hpp"
#include "gapfill/series.hpp"

namespace gapfill {

enum class CombinerMode { linear_ramp, learned_blend };

/**
 * Per-position ensemble merging the forward and backward forecasts.
 *
 * linear_ramp weights position j of an n-long gap as alpha = 1 - j/(n-1) for
 * the forward prediction (0.5 when n = 1). learned_blend fits an affine map
 * per relative-position bin on pseudo-gap triples and clamps the output to
 * the interval spanned by the two inputs; unfitted bins fall back to the
 * ramp.
 */
struct Combiner {
    struct PositionBlend {
        double weight_forward = 0.0;
        double weight_backward = 0.0;
        double offset = 0.0;
        bool fitted = false;
    };

    CombinerMode mode = CombinerMode::linear_ramp;
    std::vector<PositionBlend> bins;
    std::uint64_t train_seed = 0x5eed;

    static Combiner ramp() { return {}; }
    static Combiner learned(std::uint64_t seed = 0x5eed) {
        Combiner c;
        c.mode = CombinerMode::learned_blend;
        c.train_seed = seed;
        return c;
    }
};

std::vector<double> combine(std::span<const double> forward_pred,
                            std::span<const double> backward_pred, const Combiner& combiner);

/// Windows and fallbacks for gap filling. Zero fields resolve against the
/// effective lag window: w1 = w2 = w, min_window = max(3, w/2).
struct GapFillPolicy {
    std::size_t w = 0;  // 0 -> default_window(series length)
    std::size_t w1 = 0;
    std::size_t w2 = 0;
    std::size_t min_window = 0;
};

/// Largest window not above `requested` whose lag matrix has at least
/// min_rows rows (halving steps, floor 3). Throws "insufficient contiguous
/// data" when even w = 3 yields no rows.
std::size_t choose_window(const TimeSeries& series, std::size_t requested,
                          std::size_t min_rows = 8);

/// One genome, two fits: forward on the series as-is, backward on its
/// index reversal.
struct DirectionalModels {
    FittedPipeline forward;
    FittedPipeline backward;
    std::size_t w = 0;
};

DirectionalModels fit_directional(const Pipeline& genome, const TimeSeries& series,
                                  std::size_t w);

/// Forecast into the gap from pre-history only. The seed is the last w values
/// of the pre-window, left-padded by linear extension when the window is
/// shorter than w (but at least min_window). Throws "insufficient
/// pre-history" below min_window.
std::vector<double> fill_forward_only(const TimeSeries& series, const GapSegment& gap,
                                      const FittedPipeline& model, const GapFillPolicy& policy);

/// Mirror of fill_forward_only on the index-reversed series; the result is
/// returned in natural time order. Throws "insufficient post-history".
std::vector<double> fill_backward_only(const TimeSeries& series, const GapSegment& gap,
                                       const FittedPipeline& backward_model,
                                       const GapFillPolicy& policy);

/// Which model builds the directional pair.
struct ModelSource {
    enum class Kind { single_ridge, automl, fixed };
    Kind kind = Kind::single_ridge;
    EvoConfig evo;
    Pipeline fixed;

    static ModelSource single_ridge() { return {}; }
    static ModelSource automl(EvoConfig config) {
        ModelSource s;
        s.kind = Kind::automl;
        s.evo = std::move(config);
        return s;
    }
    static ModelSource pipeline(Pipeline p) {
        ModelSource s;
        s.kind = Kind::fixed;
        s.fixed = std::move(p);
        return s;
    }
};

/// forward_first mirrors the single-direction baseline; bidirectional is the
/// full method.
enum class FillStrategy { bidirectional, forward_first };

/// Fill exactly the listed gaps with already fitted models. Per gap: both
/// directions available -> combine; one -> that direction; none -> linear
/// interpolation between the gap edges. Context windows come from the series
/// as passed (fills are never reused as context).
TimeSeries fill_gaps_with_models(const TimeSeries& series, const std::vector<GapSegment>& gaps,
                                 const DirectionalModels& models, const GapFillPolicy& policy,
                                 const Combiner& combiner,
                                 FillStrategy strategy = FillStrategy::bidirectional);

/// End-to-end: scan gaps, fit the model pair once on the gap-free windows,
/// train the learned combiner when requested, fill every gap. Identity on a
/// complete series. Throws "series unusable" when fewer than 3 samples are
/// observed; a series too fragmented to fit any model falls back to linear
/// interpolation for every gap.
TimeSeries fill_bidirectional(const TimeSeries& series, const GapFillPolicy& policy = {},
                              const Combiner& combiner = {},
                              const ModelSource& source = {},
                              FillStrategy strategy = FillStrategy::bidirectional);

}  // namespace gapfill
