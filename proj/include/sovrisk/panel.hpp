#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace sovrisk {

// Ordinal rating scale shared by all agencies: rank 1 is the best grade,
// rank D is default. Labels are agency-specific.
struct RatingScale {
    std::map<std::string, std::vector<std::string>> labels_by_agency;

    int dim() const;  // D
    // 1-based rank of a label under an agency; throws on unknown pairs.
    int rank_of(const std::string& agency, const std::string& label) const;
    const std::string& label_of(const std::string& agency, int rank) const;

    static RatingScale from_json(std::istream& in);   // scale.json
    void to_json(std::ostream& out) const;
    // The usual three-agency, eight-class sovereign scale.
    static RatingScale bundled();
};

// Daily rating histories: N countries x T dates, ranks in 1..D.
struct RatingPanel {
    std::vector<std::string> countries;
    std::vector<std::int64_t> dates;  // day numbers, strictly increasing
    Eigen::MatrixXi ranks;            // N x T
    int dim = 0;                      // D

    std::size_t n_countries() const { return countries.size(); }
    std::size_t n_dates() const { return dates.size(); }
};

// Interest-rate panel, percent per annum.
struct RatePanel {
    std::vector<std::string> countries;
    std::vector<std::int64_t> dates;
    Eigen::MatrixXd rates;  // N x T

    std::size_t n_countries() const { return countries.size(); }
    std::size_t n_dates() const { return dates.size(); }
};

enum class SpreadUnit { Percent, BasisPoints };

const char* to_string(SpreadUnit u);
SpreadUnit spread_unit_from_string(const std::string& s);

// Credit spreads against the cross-sectional minimum rate; nonnegative,
// with at least one exact zero per date.
struct SpreadPanel {
    std::vector<std::string> countries;
    std::vector<std::int64_t> dates;
    Eigen::MatrixXd spreads;  // N x T
    SpreadUnit unit = SpreadUnit::Percent;

    std::size_t n_countries() const { return countries.size(); }
    std::size_t n_dates() const { return dates.size(); }
};

// Reads `date,country,agency,label` rating actions and expands them to a
// daily panel. Ratings persist until the next action (step functions).
// The panel starts at the latest first-action date across countries, so
// every country is rated over the whole axis, and ends at the last
// observed action date. `agency` selects rows; it may be empty when the
// file contains a single agency.
RatingPanel ingest_ratings(std::istream& in, const RatingScale& scale,
                           const std::string& agency = "",
                           std::string* agency_used = nullptr);

// Reads `date,country,rate`. The date axis is the union of observed
// dates restricted to days on which every country has been observed at
// least once; interior and trailing gaps are filled by the last
// observation carried forward.
RatePanel ingest_rates(std::istream& in);

// spreads[c][t] = rates[c][t] - min over countries of rates[.][t].
SpreadPanel compute_spreads(const RatePanel& rates);

struct AlignedPanels {
    RatingPanel ratings;
    SpreadPanel spreads;
};

// Restricts both panels to their common dates and common countries, in
// ascending date order and sorted country order.
AlignedPanels align(const RatingPanel& ratings, const SpreadPanel& spreads);

SpreadPanel convert_unit(SpreadPanel panel, SpreadUnit target);

// --- panel serialization -------------------------------------------------
//
// Wide CSV: header `date,<country>,...`, one row per date. Rating panels
// hold integer ranks, spread panels decimal values. Rating actions
// round-trip through write_rating_actions_csv -> ingest_ratings.

void write_rank_panel_csv(const RatingPanel& panel, std::ostream& out);
RatingPanel read_rank_panel_csv(std::istream& in, int dim);

void write_spread_panel_csv(const SpreadPanel& panel, std::ostream& out);
SpreadPanel read_spread_panel_csv(std::istream& in, SpreadUnit unit);

void write_rating_actions_csv(const RatingPanel& panel, const RatingScale& scale,
                              const std::string& agency, std::ostream& out);

}  // namespace sovrisk
