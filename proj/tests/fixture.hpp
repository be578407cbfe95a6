#pragma once

// Synthetic input fixture for pipeline tests: a small country panel with
// a planted regime change in the rating dynamics and rank-driven rates,
// so every pipeline stage has signal to work with.

#include "sovrisk/dates.hpp"
#include "sovrisk/rng.hpp"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace sovrisk::testfixture {

struct FixtureSpec {
    std::filesystem::path dir;
    std::uint64_t seed = 1;
    int n_days = 500;
    int break_day = 250;
};

inline void write_fixture(const FixtureSpec& spec) {
    namespace fs = std::filesystem;
    fs::create_directories(spec.dir);
    Rng rng(spec.seed);

    const std::vector<std::string> countries{"DE", "ES", "FR", "IT", "PT"};
    const std::vector<int> initial{1, 4, 2, 3, 5};
    const std::int64_t day0 = parse_iso_date("2014-01-01");

    // rank paths: calm regime before the break, downgrade-prone after
    std::vector<std::vector<int>> ranks(countries.size());
    for (std::size_t c = 0; c < countries.size(); ++c) {
        int state = initial[c];
        for (int t = 0; t < spec.n_days; ++t) {
            ranks[c].push_back(state);
            const bool calm = t < spec.break_day;
            const double move = calm ? 0.01 : 0.06;
            const double u = rng.uniform01();
            if (u < move) {
                const bool down = rng.uniform01() < (calm ? 0.4 : 0.85);
                state += down ? 1 : -1;
                if (state < 1) state = 1;
                if (state > 8) state = 8;
            }
        }
    }

    {
        std::ofstream f(spec.dir / "scale.json");
        f << R"({
  "Fitch": ["AAA", "AA", "A", "BBB", "BB", "B", "CCC-CC-C", "RD-D"],
  "Moody's": ["Aaa", "Aa", "A", "Baa", "Ba", "B", "Caa-Ca", "C"],
  "S&P": ["AAA", "AA", "A", "BBB", "BB", "B", "CCC-CC-C", "SD-D"]
}
)";
    }

    const std::vector<std::string> sp_labels{"AAA", "AA",       "A", "BBB",
                                             "BB",  "B", "CCC-CC-C", "SD-D"};
    {
        std::ofstream f(spec.dir / "ratings.csv");
        f << "date,country,agency,label\n";
        for (std::size_t c = 0; c < countries.size(); ++c) {
            int last = 0;
            for (int t = 0; t < spec.n_days; ++t) {
                if (ranks[c][static_cast<std::size_t>(t)] != last) {
                    last = ranks[c][static_cast<std::size_t>(t)];
                    f << format_iso_date(day0 + t) << ',' << countries[c] << ",S&P,"
                      << sp_labels[static_cast<std::size_t>(last - 1)] << '\n';
                }
            }
        }
        // a second agency's actions are present and must be ignored
        f << format_iso_date(day0) << ",DE,Moody's,Aaa\n";
        f << format_iso_date(day0 + 30) << ",DE,Moody's,Aa\n";
    }

    {
        std::ofstream f(spec.dir / "rates.csv");
        f << "date,country,rate\n";
        char buf[32];
        for (int t = 0; t < spec.n_days; ++t) {
            const double base = 0.5 + 0.3 * std::sin(t / 40.0);
            for (std::size_t c = 0; c < countries.size(); ++c) {
                const int rank = ranks[c][static_cast<std::size_t>(t)];
                const double rate =
                    base + 0.45 * (rank - 1) + 0.15 * rng.uniform01();
                std::snprintf(buf, sizeof(buf), "%.6f", rate);
                f << format_iso_date(day0 + t) << ',' << countries[c] << ',' << buf << '\n';
            }
        }
    }
}

}  // namespace sovrisk::testfixture
