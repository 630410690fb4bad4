#pragma once

// Matched subsamples for the event-time comparison: three-year windows whose
// final year is a hardship event, split by the pre-event hardship history.

#include <array>
#include <span>
#include <string>
#include <vector>

#include "hsdid/derive.hpp"
#include "hsdid/panel.hpp"

namespace hsdid {

enum class Group { Control, Treat };
enum class Subgroup { Low, Moderate, High };

inline constexpr std::array<Subgroup, 3> kSubgroups{Subgroup::Low, Subgroup::Moderate, Subgroup::High};

std::string_view to_string(Group g);
std::string_view to_string(Subgroup s);
Subgroup parse_subgroup(std::string_view s);

/// Non-housing hardship at event times -2, -1, 0.
struct HardshipHistory {
  std::array<bool, 3> h{};
};

/// Low = (0,0), Moderate = (0,1), High = (1,1); (1,0) has no subgroup.
std::optional<Subgroup> subgroup_of(const HardshipHistory& history);

struct Candidate {
  Window window;
  Group group = Group::Control;
  Subgroup subgroup = Subgroup::Low;
  Tenure tenure = Tenure::Renter;
  HardshipHistory history;
};

struct CandidateReport {
  std::size_t windows = 0;           // complete three-year windows
  std::size_t tenure_excluded = 0;   // windows touching the tenure but not holding it in all years
  std::size_t housing_stress_before_event = 0;
  std::size_t no_event = 0;          // no non-housing hardship at t = 0
  std::size_t recovery_history = 0;  // pre-event history (1, 0)
  std::size_t candidates = 0;
};

/// Outcome plus the standard control source columns.
std::vector<std::string> default_analysis_columns(std::string_view outcome = cols::kMcs);

std::vector<Candidate> find_candidates(const PanelDataset& ds, Tenure tenure,
                                       std::span<const std::string> analysis_columns,
                                       CandidateReport* report = nullptr);

struct MatchedSubsample {
  Tenure tenure = Tenure::Renter;
  Subgroup subgroup = Subgroup::Low;
  std::vector<Candidate> candidates;  // one per person, sorted by person id
  PanelDataset data;                  // dataset the windows index into

  std::size_t persons(Group g) const;
};

/// Per person: treat candidacies win over control ones, then the earliest event year.
MatchedSubsample dedup(std::span<const Candidate> candidates, const PanelDataset& data);

/// The Low / Moderate / High subsamples for one tenure.
std::array<MatchedSubsample, 3> build_subsamples(const PanelDataset& ds, Tenure tenure,
                                                 std::span<const std::string> analysis_columns,
                                                 CandidateReport* report = nullptr);

struct SummaryRow {
  std::string variable;
  Group group = Group::Control;
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;
};

/// Group-wise N / mean / SD (sample SD, n - 1) at one event time.
std::vector<SummaryRow> subsample_summary(const MatchedSubsample& ms, int event_time,
                                          std::string_view outcome = cols::kMcs);

/// Variable rows with Control N/Mean/SD and Treat N/Mean/SD blocks per tenure.
std::string format_summary_table(std::span<const MatchedSubsample> subsamples, int event_time,
                                 std::string_view outcome = cols::kMcs);

/// person_id,event_year,event_time,group,subgroup,<analysis columns>
std::string subsample_csv(const MatchedSubsample& ms, std::span<const std::string> analysis_columns);

/// tenure,subgroup,group,event_year,count
std::string event_year_frequency_csv(std::span<const MatchedSubsample> subsamples);

}  // namespace hsdid
