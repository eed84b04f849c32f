#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "gapfill/rng.hpp"
#include "gapfill/series.hpp"

namespace testutil {

inline constexpr double miss = gapfill::kMissing;

inline gapfill::TimeSeries make_series(std::vector<double> values) {
    return gapfill::TimeSeries{std::move(values)};
}

inline gapfill::TimeSeries random_gapped_series(gapfill::Rng& rng, std::size_t n,
                                                double missing_prob) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = rng.bernoulli(missing_prob) ? miss : rng.normal(0.0, 2.0);
    return gapfill::TimeSeries{std::move(v)};
}

inline gapfill::TimeSeries sine_series(std::size_t n, double omega = 0.3, double trend = 0.0,
                                       double noise = 0.0, std::uint64_t seed = 7) {
    gapfill::Rng rng(seed);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = std::sin(omega * static_cast<double>(i)) + trend * static_cast<double>(i);
        if (noise > 0.0) v[i] += rng.normal(0.0, noise);
    }
    return gapfill::TimeSeries{std::move(v)};
}

// Unique temp path; removed in the destructor.
class TempFile {
public:
    explicit TempFile(const std::string& name) {
        static int counter = 0;
        path_ = (std::filesystem::temp_directory_path() /
                 ("gapfill_test_" + std::to_string(::getpid()) + "_" +
                  std::to_string(counter++) + "_" + name))
                    .string();
    }
    ~TempFile() {
        std::error_code ec;
        std::filesystem::remove(path_, ec);
    }
    const std::string& path() const { return path_; }

    void write(const std::string& content) const {
        std::ofstream out(path_, std::ios::binary);
        out << content;
    }
    std::string read() const {
        std::ifstream in(path_, std::ios::binary);
        return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    }

private:
    std::string path_;
};

}  // namespace testutil
