#include "sovrisk/panel.hpp"

#include "sovrisk/dates.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace sovrisk {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::string strip(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

int RatingScale::dim() const {
    if (labels_by_agency.empty()) throw std::invalid_argument("rating scale has no agencies");
    const int d = static_cast<int>(labels_by_agency.begin()->second.size());
    for (const auto& [agency, labels] : labels_by_agency)
        if (static_cast<int>(labels.size()) != d)
            throw std::invalid_argument("rating scale: agency '" + agency +
                                        "' has inconsistent class count");
    if (d < 2) throw std::invalid_argument("rating scale needs at least 2 classes");
    return d;
}

int RatingScale::rank_of(const std::string& agency, const std::string& label) const {
    auto it = labels_by_agency.find(agency);
    if (it == labels_by_agency.end())
        throw std::invalid_argument("unknown agency '" + agency + "'");
    const auto& labels = it->second;
    auto pos = std::find(labels.begin(), labels.end(), label);
    if (pos == labels.end())
        throw std::invalid_argument("unknown label '" + label + "' for agency '" + agency + "'");
    return static_cast<int>(pos - labels.begin()) + 1;
}

const std::string& RatingScale::label_of(const std::string& agency, int rank) const {
    auto it = labels_by_agency.find(agency);
    if (it == labels_by_agency.end())
        throw std::invalid_argument("unknown agency '" + agency + "'");
    if (rank < 1 || rank > static_cast<int>(it->second.size()))
        throw std::invalid_argument("rank out of range for agency '" + agency + "'");
    return it->second[static_cast<std::size_t>(rank - 1)];
}

RatingScale RatingScale::from_json(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("scale.json: ") + e.what());
    }
    if (!j.is_object() || j.empty())
        throw std::invalid_argument("scale.json: expected an object mapping agency to labels");
    RatingScale scale;
    for (auto& [agency, labels] : j.items()) {
        if (!labels.is_array())
            throw std::invalid_argument("scale.json: agency '" + agency + "' is not an array");
        std::vector<std::string> v;
        for (const auto& l : labels) v.push_back(l.get<std::string>());
        scale.labels_by_agency[agency] = std::move(v);
    }
    scale.dim();  // validates consistency
    return scale;
}

void RatingScale::to_json(std::ostream& out) const {
    nlohmann::json j;
    for (const auto& [agency, labels] : labels_by_agency) j[agency] = labels;
    out << j.dump(2) << '\n';
}

RatingScale RatingScale::bundled() {
    RatingScale s;
    s.labels_by_agency["Moody's"] = {"Aaa", "Aa", "A", "Baa", "Ba", "B", "Caa-Ca", "C"};
    s.labels_by_agency["S&P"] = {"AAA", "AA", "A", "BBB", "BB", "B", "CCC-CC-C", "SD-D"};
    s.labels_by_agency["Fitch"] = {"AAA", "AA", "A", "BBB", "BB", "B", "CCC-CC-C", "RD-D"};
    return s;
}

const char* to_string(SpreadUnit u) {
    return u == SpreadUnit::Percent ? "percent" : "basis_points";
}

SpreadUnit spread_unit_from_string(const std::string& s) {
    if (s == "percent") return SpreadUnit::Percent;
    if (s == "basis_points" || s == "bp") return SpreadUnit::BasisPoints;
    throw std::invalid_argument("unknown spread unit '" + s + "'");
}

RatingPanel ingest_ratings(std::istream& in, const RatingScale& scale,
                           const std::string& agency_arg, std::string* agency_used) {
    const int dim = scale.dim();

    struct Action {
        std::int64_t date;
        int rank;
    };
    std::map<std::string, std::vector<Action>> actions;     // country -> actions (chosen agency)
    std::set<std::string> countries_seen;                   // any agency
    std::set<std::string> agencies_seen;
    std::set<std::tuple<std::int64_t, std::string, std::string>> keys;

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw std::invalid_argument("ratings csv: empty file");
    ++line_no;
    if (strip(line) != "date,country,agency,label")
        throw std::invalid_argument("ratings csv: expected header 'date,country,agency,label'");

    struct Row {
        std::int64_t date;
        std::string country, agency, label;
        std::size_t line_no;
    };
    std::vector<Row> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (strip(line).empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 4)
            throw std::invalid_argument("ratings csv row " + std::to_string(line_no) +
                                        ": expected 4 fields");
        Row r{parse_iso_date(strip(f[0])), strip(f[1]), strip(f[2]), strip(f[3]), line_no};
        if (r.country.empty()) throw std::invalid_argument("ratings csv row " +
                                                           std::to_string(line_no) + ": empty country");
        if (!keys.insert({r.date, r.country, r.agency}).second)
            throw std::invalid_argument("ratings csv row " + std::to_string(line_no) +
                                        ": duplicate (date,country,agency) entry");
        countries_seen.insert(r.country);
        agencies_seen.insert(r.agency);
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw std::invalid_argument("ratings csv: no data rows");

    std::string agency = agency_arg;
    if (agency.empty()) {
        if (agencies_seen.size() != 1)
            throw std::invalid_argument(
                "ratings csv contains several agencies; an agency must be selected");
        agency = *agencies_seen.begin();
    }
    if (agency_used) *agency_used = agency;

    for (const auto& r : rows) {
        if (r.agency != agency) continue;
        int rank;
        try {
            rank = scale.rank_of(agency, r.label);
        } catch (const std::invalid_argument&) {
            throw std::invalid_argument("ratings csv row " + std::to_string(r.line_no) +
                                        ": unknown label '" + r.label + "' for agency '" +
                                        agency + "'");
        }
        actions[r.country].push_back({r.date, rank});
    }

    for (const auto& c : countries_seen)
        if (!actions.count(c))
            throw std::invalid_argument("country '" + c + "' has no records for agency '" +
                                        agency + "'");

    // Panel axis: daily from the latest first action (so every country is
    // rated everywhere) to the latest action overall.
    std::int64_t start = std::numeric_limits<std::int64_t>::min();
    std::int64_t end = std::numeric_limits<std::int64_t>::min();
    for (auto& [country, acts] : actions) {
        std::sort(acts.begin(), acts.end(),
                  [](const Action& a, const Action& b) { return a.date < b.date; });
        start = std::max(start, acts.front().date);
        end = std::max(end, acts.back().date);
    }

    RatingPanel panel;
    panel.dim = dim;
    for (const auto& [country, _] : actions) panel.countries.push_back(country);
    const auto n = static_cast<Eigen::Index>(panel.countries.size());
    const auto t_len = static_cast<Eigen::Index>(end - start + 1);
    panel.dates.resize(static_cast<std::size_t>(t_len));
    for (Eigen::Index t = 0; t < t_len; ++t) panel.dates[static_cast<std::size_t>(t)] = start + t;
    panel.ranks.resize(n, t_len);

    Eigen::Index row = 0;
    for (const auto& [country, acts] : actions) {
        std::size_t a = 0;
        int current = 0;
        // position at the last action on or before `start`
        while (a < acts.size() && acts[a].date <= start) current = acts[a++].rank;
        if (current == 0)
            throw std::logic_error("rating forward-fill: no action at panel start");
        for (Eigen::Index t = 0; t < t_len; ++t) {
            const std::int64_t date = start + t;
            while (a < acts.size() && acts[a].date <= date) current = acts[a++].rank;
            panel.ranks(row, t) = current;
        }
        ++row;
    }
    return panel;
}

RatePanel ingest_rates(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw std::invalid_argument("rates csv: empty file");
    ++line_no;
    if (strip(line) != "date,country,rate")
        throw std::invalid_argument("rates csv: expected header 'date,country,rate'");

    std::map<std::string, std::map<std::int64_t, double>> obs;  // country -> date -> rate
    std::set<std::int64_t> all_dates;
    while (std::getline(in, line)) {
        ++line_no;
        if (strip(line).empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 3)
            throw std::invalid_argument("rates csv row " + std::to_string(line_no) +
                                        ": expected 3 fields");
        const std::int64_t date = parse_iso_date(strip(f[0]));
        const std::string country = strip(f[1]);
        double rate;
        try {
            std::size_t pos = 0;
            rate = std::stod(strip(f[2]), &pos);
            if (pos != strip(f[2]).size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw std::invalid_argument("rates csv row " + std::to_string(line_no) +
                                        ": non-numeric rate '" + f[2] + "'");
        }
        if (!std::isfinite(rate))
            throw std::invalid_argument("rates csv row " + std::to_string(line_no) +
                                        ": rate is not finite");
        if (!obs[country].emplace(date, rate).second)
            throw std::invalid_argument("rates csv row " + std::to_string(line_no) +
                                        ": duplicate (date,country) entry");
        all_dates.insert(date);
    }
    if (obs.empty()) throw std::invalid_argument("rates csv: no data rows");

    // Dates before some country's first observation are dropped; later
    // gaps are filled by the last observation carried forward.
    std::int64_t start = std::numeric_limits<std::int64_t>::min();
    for (const auto& [country, series] : obs) start = std::max(start, series.begin()->first);

    std::vector<std::int64_t> dates;
    for (std::int64_t d : all_dates)
        if (d >= start) dates.push_back(d);
    if (dates.empty()) throw std::invalid_argument("rates csv: no common date coverage");

    RatePanel panel;
    for (const auto& [country, _] : obs) panel.countries.push_back(country);
    panel.dates = dates;
    panel.rates.resize(static_cast<Eigen::Index>(panel.countries.size()),
                       static_cast<Eigen::Index>(dates.size()));

    Eigen::Index row = 0;
    for (const auto& [country, series] : obs) {
        double last = std::numeric_limits<double>::quiet_NaN();
        auto it = series.begin();
        for (std::size_t t = 0; t < dates.size(); ++t) {
            while (it != series.end() && it->first <= dates[t]) last = (it++)->second;
            panel.rates(row, static_cast<Eigen::Index>(t)) = last;
        }
        ++row;
    }
    return panel;
}

SpreadPanel compute_spreads(const RatePanel& rates) {
    if (rates.countries.empty() || rates.dates.empty())
        throw std::invalid_argument("compute_spreads: empty panel");
    SpreadPanel panel;
    panel.countries = rates.countries;
    panel.dates = rates.dates;
    panel.unit = SpreadUnit::Percent;
    panel.spreads.resize(rates.rates.rows(), rates.rates.cols());
    for (Eigen::Index t = 0; t < rates.rates.cols(); ++t) {
        const double benchmark = rates.rates.col(t).minCoeff();
        for (Eigen::Index c = 0; c < rates.rates.rows(); ++c)
            panel.spreads(c, t) = rates.rates(c, t) - benchmark;
    }
    return panel;
}

AlignedPanels align(const RatingPanel& ratings, const SpreadPanel& spreads) {
    std::vector<std::string> countries;
    {
        const std::set<std::string> a(ratings.countries.begin(), ratings.countries.end());
        for (const auto& c : spreads.countries)
            if (a.count(c)) countries.push_back(c);
        std::sort(countries.begin(), countries.end());
    }
    if (countries.empty()) throw std::invalid_argument("align: no common countries");

    std::set<std::int64_t> rating_dates(ratings.dates.begin(), ratings.dates.end());
    std::vector<std::int64_t> dates;
    for (std::int64_t d : spreads.dates)
        if (rating_dates.count(d)) dates.push_back(d);
    if (dates.empty()) throw std::invalid_argument("align: no common dates");

    auto index_of = [](const std::vector<std::string>& v, const std::string& key) {
        return static_cast<Eigen::Index>(std::find(v.begin(), v.end(), key) - v.begin());
    };
    std::map<std::int64_t, std::size_t> rating_date_pos, spread_date_pos;
    for (std::size_t i = 0; i < ratings.dates.size(); ++i) rating_date_pos[ratings.dates[i]] = i;
    for (std::size_t i = 0; i < spreads.dates.size(); ++i) spread_date_pos[spreads.dates[i]] = i;

    AlignedPanels out;
    out.ratings.countries = countries;
    out.ratings.dates = dates;
    out.ratings.dim = ratings.dim;
    out.spreads.countries = countries;
    out.spreads.dates = dates;
    out.spreads.unit = spreads.unit;
    const auto n = static_cast<Eigen::Index>(countries.size());
    const auto t_len = static_cast<Eigen::Index>(dates.size());
    out.ratings.ranks.resize(n, t_len);
    out.spreads.spreads.resize(n, t_len);
    for (Eigen::Index c = 0; c < n; ++c) {
        const Eigen::Index rc = index_of(ratings.countries, countries[static_cast<std::size_t>(c)]);
        const Eigen::Index sc = index_of(spreads.countries, countries[static_cast<std::size_t>(c)]);
        for (Eigen::Index t = 0; t < t_len; ++t) {
            const std::int64_t d = dates[static_cast<std::size_t>(t)];
            out.ratings.ranks(c, t) =
                ratings.ranks(rc, static_cast<Eigen::Index>(rating_date_pos.at(d)));
            out.spreads.spreads(c, t) =
                spreads.spreads(sc, static_cast<Eigen::Index>(spread_date_pos.at(d)));
        }
    }
    return out;
}

SpreadPanel convert_unit(SpreadPanel panel, SpreadUnit target) {
    if (panel.unit == target) return panel;
    const double factor = (target == SpreadUnit::BasisPoints) ? 100.0 : 0.01;
    panel.spreads *= factor;
    panel.unit = target;
    return panel;
}

void write_rank_panel_csv(const RatingPanel& panel, std::ostream& out) {
    out << "date";
    for (const auto& c : panel.countries) out << ',' << c;
    out << '\n';
    for (std::size_t t = 0; t < panel.dates.size(); ++t) {
        out << format_iso_date(panel.dates[t]);
        for (Eigen::Index c = 0; c < panel.ranks.rows(); ++c)
            out << ',' << panel.ranks(c, static_cast<Eigen::Index>(t));
        out << '\n';
    }
}

RatingPanel read_rank_panel_csv(std::istream& in, int dim) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("rank panel csv: empty file");
    auto header = split_csv_line(strip(line));
    if (header.size() < 2 || header[0] != "date")
        throw std::invalid_argument("rank panel csv: bad header");
    RatingPanel panel;
    panel.dim = dim;
    panel.countries.assign(header.begin() + 1, header.end());
    std::vector<std::vector<int>> cols;
    while (std::getline(in, line)) {
        if (strip(line).empty()) continue;
        auto f = split_csv_line(strip(line));
        if (f.size() != header.size())
            throw std::invalid_argument("rank panel csv: ragged row");
        panel.dates.push_back(parse_iso_date(f[0]));
        std::vector<int> vals;
        for (std::size_t i = 1; i < f.size(); ++i) {
            const int r = std::stoi(f[i]);
            if (r < 1 || r > dim)
                throw std::invalid_argument("rank panel csv: rank out of range 1..D");
            vals.push_back(r);
        }
        cols.push_back(std::move(vals));
    }
    panel.ranks.resize(static_cast<Eigen::Index>(panel.countries.size()),
                       static_cast<Eigen::Index>(panel.dates.size()));
    for (std::size_t t = 0; t < cols.size(); ++t)
        for (std::size_t c = 0; c < panel.countries.size(); ++c)
            panel.ranks(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) = cols[t][c];
    return panel;
}

void write_spread_panel_csv(const SpreadPanel& panel, std::ostream& out) {
    out << "date";
    for (const auto& c : panel.countries) out << ',' << c;
    out << '\n';
    for (std::size_t t = 0; t < panel.dates.size(); ++t) {
        out << format_iso_date(panel.dates[t]);
        for (Eigen::Index c = 0; c < panel.spreads.rows(); ++c)
            out << ',' << fmt_double(panel.spreads(c, static_cast<Eigen::Index>(t)));
        out << '\n';
    }
}

SpreadPanel read_spread_panel_csv(std::istream& in, SpreadUnit unit) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("spread panel csv: empty file");
    auto header = split_csv_line(strip(line));
    if (header.size() < 2 || header[0] != "date")
        throw std::invalid_argument("spread panel csv: bad header");
    SpreadPanel panel;
    panel.unit = unit;
    panel.countries.assign(header.begin() + 1, header.end());
    std::vector<std::vector<double>> cols;
    while (std::getline(in, line)) {
        if (strip(line).empty()) continue;
        auto f = split_csv_line(strip(line));
        if (f.size() != header.size())
            throw std::invalid_argument("spread panel csv: ragged row");
        panel.dates.push_back(parse_iso_date(f[0]));
        std::vector<double> vals;
        for (std::size_t i = 1; i < f.size(); ++i) vals.push_back(std::stod(f[i]));
        cols.push_back(std::move(vals));
    }
    panel.spreads.resize(static_cast<Eigen::Index>(panel.countries.size()),
                         static_cast<Eigen::Index>(panel.dates.size()));
    for (std::size_t t = 0; t < cols.size(); ++t)
        for (std::size_t c = 0; c < panel.countries.size(); ++c)
            panel.spreads(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) = cols[t][c];
    return panel;
}

void write_rating_actions_csv(const RatingPanel& panel, const RatingScale& scale,
                              const std::string& agency, std::ostream& out) {
    out << "date,country,agency,label\n";
    for (std::size_t c = 0; c < panel.countries.size(); ++c) {
        int last = 0;
        for (std::size_t t = 0; t < panel.dates.size(); ++t) {
            const int r = panel.ranks(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t));
            if (r != last) {
                out << format_iso_date(panel.dates[t]) << ',' << panel.countries[c] << ','
                    << agency << ',' << scale.label_of(agency, r) << '\n';
                last = r;
            }
        }
    }
}

}  // namespace sovrisk
