#include "sovrisk/pipeline.hpp"

#include "sovrisk/changepoint.hpp"
#include "sovrisk/copula.hpp"
#include "sovrisk/dates.hpp"
#include "sovrisk/marginals.hpp"
#include "sovrisk/markov.hpp"
#include "sovrisk/montecarlo.hpp"
#include "sovrisk/risk.hpp"
#include "sovrisk/svg.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace sovrisk {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open input file: " + path.string());
    return in;
}

std::ofstream open_output(const fs::path& path) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path.string());
    return out;
}

json load_json(const fs::path& path) {
    auto in = open_input(path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
    return j;
}

void save_json(const fs::path& path, const json& j) {
    auto out = open_output(path);
    out << j.dump(2) << '\n';
}

RatingScale load_scale(const RunConfig& cfg) {
    if (cfg.scale_json.empty()) return RatingScale::bundled();
    auto in = open_input(cfg.scale_json);
    return RatingScale::from_json(in);
}

struct PanelArtifacts {
    RatingPanel ratings;
    SpreadPanel spreads;
    std::string agency;
};

PanelArtifacts load_panels(const RunConfig& cfg) {
    const fs::path out(cfg.out);
    const json meta = load_json(out / "panel_meta.json");
    PanelArtifacts art;
    art.agency = meta.at("agency").get<std::string>();
    const int dim = meta.at("dim").get<int>();
    const auto unit = spread_unit_from_string(meta.at("unit").get<std::string>());
    {
        auto in = open_input(out / "ratings_panel.csv");
        art.ratings = read_rank_panel_csv(in, dim);
    }
    {
        auto in = open_input(out / "spreads_panel.csv");
        art.spreads = read_spread_panel_csv(in, unit);
    }
    if (art.ratings.countries != art.spreads.countries || art.ratings.dates != art.spreads.dates)
        throw std::invalid_argument("panel artifacts are not aligned; re-run ingest");
    return art;
}

std::int64_t resolve_min_seg(const RunConfig& cfg, int dim) {
    if (cfg.min_seg > 0) return cfg.min_seg;
    return static_cast<std::int64_t>(dim) * dim;
}

SearchOptions search_options(const RunConfig& cfg, int dim) {
    SearchOptions opts;
    opts.min_seg = resolve_min_seg(cfg, dim);
    opts.two_stage = cfg.two_stage;
    opts.stride = cfg.stride;
    return opts;
}

std::vector<std::int64_t> tau_indices_from_json(const json& cp) {
    std::vector<std::int64_t> taus;
    for (const auto& t : cp.at("tau_indices")) taus.push_back(t.get<std::int64_t>());
    return taus;
}

// Segment matrices from the panel and the selected breaks.
std::vector<TransitionMatrix> estimate_segments(const RatingPanel& panel,
                                                const std::vector<std::int64_t>& taus) {
    TransitionCounts counts(panel.ranks, panel.dim);
    std::vector<std::int64_t> bounds{0};
    for (auto t : taus) bounds.push_back(t);
    bounds.push_back(counts.steps());
    std::vector<TransitionMatrix> out;
    for (std::size_t m = 0; m + 1 < bounds.size(); ++m) {
        TransitionMatrix tm;
        tm.start = bounds[m];
        tm.end = bounds[m + 1];
        tm.probs = estimate_matrix(counts.counts(bounds[m], bounds[m + 1]));
        out.push_back(std::move(tm));
    }
    return out;
}

std::vector<ClassMarginal> load_marginal_samples(const fs::path& out, int dim) {
    std::vector<ClassMarginal> marginals(static_cast<std::size_t>(dim));
    for (int r = 1; r <= dim; ++r) {
        auto& m = marginals[static_cast<std::size_t>(r - 1)];
        m.rank = r;
        const fs::path path = out / "samples" / ("rank_" + std::to_string(r) + ".csv");
        if (!fs::exists(path)) continue;
        auto in = open_input(path);
        std::string line;
        if (!std::getline(in, line) || line != "spread")
            throw std::invalid_argument(path.string() + ": expected header 'spread'");
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            m.samples.push_back(std::stod(line));
        }
        std::sort(m.samples.begin(), m.samples.end());
    }
    return marginals;
}

std::vector<Eigen::MatrixXd> load_segment_matrices(const fs::path& out) {
    std::vector<Eigen::MatrixXd> matrices;
    for (int l = 0;; ++l) {
        const fs::path path = out / ("matrix_seg" + std::to_string(l) + ".csv");
        if (!fs::exists(path)) break;
        auto in = open_input(path);
        matrices.push_back(read_matrix_csv(in));
    }
    if (matrices.empty())
        throw std::invalid_argument("no estimated matrices found; run `estimate` first");
    return matrices;
}

std::vector<int> final_ranks(const RatingPanel& panel) {
    std::vector<int> ranks(panel.n_countries());
    const auto last = static_cast<Eigen::Index>(panel.n_dates()) - 1;
    for (std::size_t c = 0; c < panel.n_countries(); ++c)
        ranks[c] = panel.ranks(static_cast<Eigen::Index>(c), last);
    return ranks;
}

std::vector<double> class_means_from_marginals(const std::vector<ClassMarginal>& marginals) {
    std::vector<double> means;
    means.reserve(marginals.size());
    for (const auto& m : marginals) means.push_back(m.empty() ? 0.0 : expected_class_spread(m));
    return means;
}

struct TheilCsv {
    std::vector<double> mean_dt, q05, q95, inter, intra;
};

TheilCsv read_theil_path_csv(const fs::path& path) {
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line) || line != "t,mean_DT,q05,q95,inter,intra")
        throw std::invalid_argument(path.string() + ": unexpected header");
    TheilCsv out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<double> row;
        while (std::getline(ss, field, ','))
            row.push_back(field == "nan" ? std::numeric_limits<double>::quiet_NaN()
                                         : std::stod(field));
        if (row.size() != 6) throw std::invalid_argument(path.string() + ": ragged row");
        out.mean_dt.push_back(row[1]);
        out.q05.push_back(row[2]);
        out.q95.push_back(row[3]);
        out.inter.push_back(row[4]);
        out.intra.push_back(row[5]);
    }
    return out;
}

void write_country_matrix_csv(const fs::path& path, const std::vector<std::string>& countries,
                              const Eigen::MatrixXd& m) {
    auto out = open_output(path);
    out << "country";
    for (const auto& c : countries) out << ',' << c;
    out << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out << countries[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << fmt(m(i, j));
        out << '\n';
    }
}

}  // namespace

RunConfig RunConfig::from_json_file(const std::string& path) {
    const json j = load_json(path);
    RunConfig cfg;
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("ratings_csv", cfg.ratings_csv);
    get("rates_csv", cfg.rates_csv);
    get("scale_json", cfg.scale_json);
    get("agency", cfg.agency);
    if (j.contains("unit")) cfg.unit = spread_unit_from_string(j.at("unit").get<std::string>());
    get("alpha", cfg.alpha);
    get("bootstrap_reps", cfg.bootstrap_reps);
    get("k_max", cfg.k_max);
    get("min_seg", cfg.min_seg);
    get("two_stage", cfg.two_stage);
    get("stride", cfg.stride);
    get("seed", cfg.seed);
    get("threads", cfg.threads);
    get("out", cfg.out);
    if (j.contains("simulation")) {
        const json& s = j.at("simulation");
        auto gets = [&](const char* key, auto& field) {
            if (s.contains(key)) field = s.at(key).get<std::decay_t<decltype(field)>>();
        };
        gets("horizon_steps", cfg.horizon_steps);
        gets("iterations", cfg.iterations);
        gets("cov_time", cfg.cov_time);
        gets("drift_adjustment", cfg.drift_adjustment);
        gets("second_moment_draws", cfg.second_moment_draws);
    }
    if (cfg.alpha <= 0.0 || cfg.alpha >= 1.0)
        throw std::invalid_argument("config: alpha must lie in (0,1)");
    return cfg;
}

void cmd_ingest(const RunConfig& cfg) {
    if (cfg.ratings_csv.empty() || cfg.rates_csv.empty())
        throw std::invalid_argument("ingest: ratings_csv and rates_csv must be set");
    const RatingScale scale = load_scale(cfg);

    auto ratings_in = open_input(cfg.ratings_csv);
    std::string agency_used;
    const RatingPanel ratings = ingest_ratings(ratings_in, scale, cfg.agency, &agency_used);
    auto rates_in = open_input(cfg.rates_csv);
    const RatePanel rates = ingest_rates(rates_in);
    SpreadPanel spreads = convert_unit(compute_spreads(rates), cfg.unit);

    const AlignedPanels aligned = align(ratings, spreads);

    const fs::path out(cfg.out);
    {
        auto f = open_output(out / "ratings_panel.csv");
        write_rank_panel_csv(aligned.ratings, f);
    }
    {
        auto f = open_output(out / "spreads_panel.csv");
        write_spread_panel_csv(aligned.spreads, f);
    }
    json meta;
    meta["agency"] = agency_used;
    meta["unit"] = to_string(aligned.spreads.unit);
    meta["dim"] = aligned.ratings.dim;
    meta["countries"] = aligned.ratings.countries;
    meta["n_dates"] = aligned.ratings.n_dates();
    meta["date_start"] = format_iso_date(aligned.ratings.dates.front());
    meta["date_end"] = format_iso_date(aligned.ratings.dates.back());
    save_json(out / "panel_meta.json", meta);
}

void cmd_changepoint(const RunConfig& cfg) {
    const PanelArtifacts art = load_panels(cfg);
    const fs::path out(cfg.out);
    const SearchOptions opts = search_options(cfg, art.ratings.dim);

    const ModelSelection sel = model_select(art.ratings, cfg.k_max, opts);
    TransitionCounts counts(art.ratings.ranks, art.ratings.dim);

    json cp;
    cp["agency"] = art.agency;
    cp["k"] = sel.best.k;
    cp["alpha"] = cfg.alpha;
    cp["seed"] = cfg.seed;
    json by_k = json::array();
    for (const auto& fit : sel.by_k) {
        json row;
        row["k"] = fit.k;
        row["loglik"] = fit.total_loglik;
        row["params"] = fit.param_count;
        row["bic"] = fit.bic;
        row["taus"] = fit.taus;
        by_k.push_back(row);
    }
    cp["bic_by_k"] = by_k;
    cp["tau_indices"] = sel.best.taus;
    json tau_dates = json::array();
    for (auto t : sel.best.taus)
        tau_dates.push_back(format_iso_date(art.ratings.dates[static_cast<std::size_t>(t)]));
    cp["tau_dates"] = tau_dates;

    const int d = art.ratings.dim;
    LrtResult lrt;
    lrt.df = static_cast<std::int64_t>(d) * (d - 1) * sel.best.k;
    bool have_bootstrap = false;
    if (sel.best.k >= 1 && cfg.bootstrap_reps > 0) {
        lrt.lambda = lrt_statistic(counts, sel.best.taus);
        BootstrapOptions boot;
        boot.replicates = cfg.bootstrap_reps;
        boot.alpha = cfg.alpha;
        boot.seed = cfg.seed;
        boot.threads = cfg.threads;
        const BootstrapResult bres = bootstrap_critical(art.ratings, sel.best.k, opts, boot);
        lrt.critical_value = bres.critical_value;
        lrt.p_value = bres.p_value(lrt.lambda);
        have_bootstrap = true;
    }
    cp["df"] = lrt.df;
    cp["lambda"] = lrt.lambda;
    cp["critical_value"] = have_bootstrap ? json(lrt.critical_value) : json();
    cp["p_value"] = lrt.p_value;
    cp["bootstrap_reps"] = have_bootstrap ? cfg.bootstrap_reps : 0;
    save_json(out / "changepoints.json", cp);
}

void cmd_estimate(const RunConfig& cfg) {
    const PanelArtifacts art = load_panels(cfg);
    const fs::path out(cfg.out);
    const json cp = load_json(out / "changepoints.json");
    const auto taus = tau_indices_from_json(cp);

    const auto segments = estimate_segments(art.ratings, taus);
    for (std::size_t l = 0; l < segments.size(); ++l) {
        {
            auto f = open_output(out / ("matrix_seg" + std::to_string(l) + ".csv"));
            write_matrix_csv(segments[l].probs, f);
        }
        json side;
        side["segment"] = l;
        side["start_index"] = segments[l].start;
        side["end_index"] = segments[l].end;
        side["start_date"] =
            format_iso_date(art.ratings.dates[static_cast<std::size_t>(segments[l].start)]);
        // end index is one past the last transition; the matrix governs
        // transitions departing up to end-1
        side["end_date"] =
            format_iso_date(art.ratings.dates[static_cast<std::size_t>(segments[l].end)]);
        side["mobility_m_svd"] = mobility_metric(segments[l].probs);
        save_json(out / ("matrix_seg" + std::to_string(l) + ".json"), side);
    }

    const auto marginals = build_marginals(art.ratings, art.spreads);
    {
        auto f = open_output(out / "marginals.csv");
        f << "rank,count,mean,stdev,skew,kurt\n";
        for (const auto& m : marginals) {
            const MarginalStats st = marginal_stats(m);
            f << st.rank << ',' << st.count << ',' << fmt(st.mean) << ',' << fmt(st.st_dev) << ','
              << fmt(st.skewness) << ',' << fmt(st.kurtosis) << '\n';
        }
    }
    for (const auto& m : marginals) {
        if (m.empty()) continue;
        auto f = open_output(out / "samples" / ("rank_" + std::to_string(m.rank) + ".csv"));
        f << "spread\n";
        for (double s : m.samples) f << fmt(s) << '\n';
    }

    const CopulaModel copula = fit_copula(art.spreads);
    {
        auto f = open_output(out / "copula.csv");
        write_copula_csv(copula, f);
    }
}

void cmd_simulate(const RunConfig& cfg) {
    const PanelArtifacts art = load_panels(cfg);
    const fs::path out(cfg.out);
    const auto matrices = load_segment_matrices(out);
    const auto marginals = load_marginal_samples(out, art.ratings.dim);
    CopulaModel copula;
    {
        auto in = open_input(out / "copula.csv");
        copula = read_copula_csv(in);
    }
    if (copula.countries != art.ratings.countries)
        throw std::invalid_argument("copula.csv countries do not match the panel");

    // Simulation runs on the dynamics after the last detected break.
    const SegmentedChainModel chain = SegmentedChainModel::single(matrices.back());

    SimulationConfig sim;
    sim.horizon_steps = cfg.horizon_steps;
    sim.iterations = cfg.iterations;
    sim.seed = cfg.seed;
    sim.cov_time = cfg.cov_time;
    sim.threads = cfg.threads;
    sim.drift_adjustment = cfg.drift_adjustment;
    if (cfg.drift_adjustment) sim.drift_rates = estimate_drift_rates(art.spreads);

    const std::vector<int> initial = final_ranks(art.ratings);
    const SimulationResult res = run_simulation(chain, marginals, copula, initial, sim);

    {
        auto f = open_output(out / "theil_path.csv");
        f << "t,mean_DT,q05,q95,inter,intra\n";
        for (std::size_t t = 0; t < res.mean_dt.size(); ++t)
            f << t << ',' << fmt(res.mean_dt[t]) << ',' << fmt(res.q05_dt[t]) << ','
              << fmt(res.q95_dt[t]) << ',' << fmt(res.mean_inter[t]) << ','
              << fmt(res.mean_intra[t]) << '\n';
    }
    {
        auto f = open_output(out / "totals.csv");
        f << "country,mean_total_spread\n";
        for (std::size_t c = 0; c < art.ratings.countries.size(); ++c)
            f << art.ratings.countries[c] << ',' << fmt(res.mean_total_spread[c]) << '\n';
    }
    write_country_matrix_csv(out / "correlation_sim.csv", art.ratings.countries,
                             res.cum_spread_corr);

    json meta;
    meta["horizon_steps"] = res.horizon;
    meta["iterations"] = res.iterations;
    meta["cov_time"] = res.cov_time;
    meta["seed"] = cfg.seed;
    meta["drift_adjustment"] = cfg.drift_adjustment;
    json sd_cov = json::array(), sd_final = json::array();
    for (std::size_t c = 0; c < art.ratings.countries.size(); ++c) {
        sd_cov.push_back(std::sqrt(res.cum_spread_cov(static_cast<Eigen::Index>(c),
                                                      static_cast<Eigen::Index>(c))));
        sd_final.push_back(res.sd_total_spread[c]);
    }
    meta["sd_total_at_cov_time"] = sd_cov;
    meta["sd_total_at_horizon"] = sd_final;
    save_json(out / "simulate_meta.json", meta);
}

void cmd_report(const RunConfig& cfg) {
    const PanelArtifacts art = load_panels(cfg);
    const fs::path out(cfg.out);
    const json cp = load_json(out / "changepoints.json");
    const json sim_meta = load_json(out / "simulate_meta.json");
    const auto matrices = load_segment_matrices(out);
    const auto marginals = load_marginal_samples(out, art.ratings.dim);
    CopulaModel copula;
    {
        auto in = open_input(out / "copula.csv");
        copula = read_copula_csv(in);
    }
    const TheilCsv theil = read_theil_path_csv(out / "theil_path.csv");

    const std::int64_t horizon = sim_meta.at("horizon_steps").get<std::int64_t>();
    const std::int64_t cov_time = sim_meta.at("cov_time").get<std::int64_t>();

    const std::vector<int> initial = final_ranks(art.ratings);
    const RewardModel reward = RewardModel::make(SegmentedChainModel::single(matrices.back()),
                                                 class_means_from_marginals(marginals), initial);

    // total_spread.csv: closed-form V_j(t) and the aggregate V(t)
    const Eigen::MatrixXd v_table = expected_total_spread_table(reward, horizon);
    std::vector<double> v_total(static_cast<std::size_t>(horizon) + 1, 0.0);
    {
        auto f = open_output(out / "total_spread.csv");
        f << "t";
        for (int j = 1; j <= art.ratings.dim; ++j) f << ",V_" << j;
        f << ",V_total\n";
        for (std::int64_t t = 0; t <= horizon; ++t) {
            f << t;
            double total = 0.0;
            for (int j = 0; j < art.ratings.dim; ++j) {
                const double v = v_table(static_cast<Eigen::Index>(t), j);
                f << ',' << fmt(v);
                total += static_cast<double>(reward.initial_counts[static_cast<std::size_t>(j)]) * v;
            }
            v_total[static_cast<std::size_t>(t)] = total;
            f << ',' << fmt(total) << '\n';
        }
    }

    // Closed-form covariance at cov_time, second moments by Monte Carlo
    // under the fitted copula (dedicated report stream off the run seed).
    const auto n = static_cast<Eigen::Index>(art.ratings.countries.size());
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd rho = Eigen::MatrixXd::Identity(n, n);
    std::vector<double> sd_cov;
    for (const auto& v : sim_meta.at("sd_total_at_cov_time")) sd_cov.push_back(v.get<double>());
    Rng rng(cfg.seed ^ 0xA5A5A5A5ULL);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = a + 1; b < n; ++b) {
            const Eigen::MatrixXd smm =
                pair_second_moments(copula, static_cast<int>(a), static_cast<int>(b), marginals,
                                    cfg.second_moment_draws, rng);
            const CovarianceResult cov =
                spread_correlation(reward, smm, static_cast<int>(a), static_cast<int>(b), cov_time,
                                   sd_cov[static_cast<std::size_t>(a)],
                                   sd_cov[static_cast<std::size_t>(b)]);
            sigma(a, b) = sigma(b, a) = cov.sigma;
            rho(a, b) = rho(b, a) = cov.rho;
        }
    write_country_matrix_csv(out / "covariance.csv", art.ratings.countries, sigma);
    write_country_matrix_csv(out / "correlation_model.csv", art.ratings.countries, rho);

    // diagnostics
    const AnovaResult anova = anova_f(marginals);
    const CorrelationResult obs_corr = series_correlation(art.spreads);

    // plots
    {
        auto f = open_output(out / "theil_path.svg");
        write_line_chart_svg(f, "Expected dynamic Theil index", "t", "DT",
                             {{"mean DT", theil.mean_dt, "#1f77b4"},
                              {"q05", theil.q05, "#aec7e8"},
                              {"q95", theil.q95, "#aec7e8"},
                              {"inter", theil.inter, "#d62728"},
                              {"intra", theil.intra, "#2ca02c"}});
    }
    {
        auto f = open_output(out / "total_spread.svg");
        write_line_chart_svg(f, "Expected total credit spread", "t", "V(t)",
                             {{"V(t)", v_total, "#1f77b4"}});
    }
    {
        std::vector<double> delta(v_total.size(), std::numeric_limits<double>::quiet_NaN());
        for (std::size_t t = 1; t < v_total.size(); ++t) delta[t] = v_total[t] - v_total[t - 1];
        auto f = open_output(out / "delta_total_spread.svg");
        write_line_chart_svg(f, "Step change of the expected total credit spread", "t",
                             "V(t) - V(t-1)", {{"dV", delta, "#1f77b4"}});
    }

    json summary;
    summary["seed"] = cfg.seed;
    summary["agency"] = art.agency;
    summary["unit"] = to_string(art.spreads.unit);
    summary["dim"] = art.ratings.dim;
    summary["countries"] = art.ratings.countries;
    summary["n_dates"] = art.ratings.n_dates();
    summary["changepoints"] = cp;
    json mobility = json::array();
    for (std::size_t l = 0; l < matrices.size(); ++l) {
        json m;
        m["segment"] = l;
        m["m_svd"] = mobility_metric(matrices[l]);
        mobility.push_back(m);
    }
    summary["mobility"] = mobility;
    {
        TransitionCounts counts(art.ratings.ranks, art.ratings.dim);
        const Eigen::MatrixXd pooled = estimate_matrix(counts.counts(0, counts.steps()));
        summary["d_js_last_vs_pooled"] = js_distance(matrices.back(), pooled);
    }
    summary["anova_f"] = std::isfinite(anova.f) ? json(anova.f) : json();
    summary["anova_p"] = anova.p_value;
    summary["observed_correlation_flags"] = obs_corr.zero_variance;
    json theil_summary;
    theil_summary["initial_mean_dt"] = theil.mean_dt.front();
    theil_summary["final_mean_dt"] = theil.mean_dt.back();
    theil_summary["final_inter"] = theil.inter.back();
    theil_summary["final_intra"] = theil.intra.back();
    summary["theil"] = theil_summary;
    json totals;
    totals["horizon"] = horizon;
    totals["cov_time"] = cov_time;
    json v_at;
    for (std::int64_t t : {std::int64_t{0}, horizon / 3, 2 * horizon / 3, horizon})
        v_at[std::to_string(t)] = v_total[static_cast<std::size_t>(t)];
    totals["v_at"] = v_at;
    summary["total_spread"] = totals;
    json files = json::array();
    for (const char* name :
         {"ratings_panel.csv", "spreads_panel.csv", "changepoints.json", "marginals.csv",
          "copula.csv", "theil_path.csv", "totals.csv", "correlation_sim.csv", "total_spread.csv",
          "covariance.csv", "correlation_model.csv", "theil_path.svg", "total_spread.svg",
          "delta_total_spread.svg"})
        files.push_back(name);
    summary["files"] = files;
    save_json(out / "summary.json", summary);
}

}  // namespace sovrisk
