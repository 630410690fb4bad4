#pragma once

// Long-format person-year panel: typed columns, (person, year) index,
// calendar-year lags and consecutive three-year windows.

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace hsdid {

using PersonId = std::int64_t;

enum class ColumnKind { Integer, Real, Boolean, Categorical };

std::string_view to_string(ColumnKind kind);

struct ColumnSpec {
  std::string name;
  ColumnKind kind;

  bool operator==(const ColumnSpec&) const = default;
};

using Schema = std::vector<ColumnSpec>;

struct Missing {
  bool operator==(const Missing&) const = default;
};

/// A single cell. `Missing` is distinct from 0 / false / "" for every kind.
using Value = std::variant<Missing, std::int64_t, double, bool, std::string>;

inline bool is_missing(const Value& v) { return std::holds_alternative<Missing>(v); }

/// Typed column with an explicit presence mask.
class Column {
 public:
  Column(std::string name, ColumnKind kind);

  const std::string& name() const { return name_; }
  ColumnKind kind() const { return kind_; }
  std::size_t size() const { return present_.size(); }
  bool numeric() const { return kind_ != ColumnKind::Categorical; }

  bool is_missing(std::size_t row) const { return present_[row] == 0; }
  std::size_t missing_count() const;

  /// Integer, real and boolean cells as double; nullopt when missing or categorical.
  std::optional<double> number(std::size_t row) const;
  std::optional<bool> boolean(std::size_t row) const;
  std::optional<std::string_view> category(std::size_t row) const;
  Value value(std::size_t row) const;

  /// Appends a cell; throws InputError on a kind mismatch. Integers are
  /// accepted by real columns, and 0/1 integers by boolean columns.
  void push_back(const Value& v);
  void push_missing();
  void push_number(double v);
  void push_bool(bool v);
  void push_category(std::string v);

  Column renamed(std::string name) const;
  Column gather(std::span<const std::size_t> rows) const;

  bool operator==(const Column& other) const;

 private:
  std::string name_;
  ColumnKind kind_;
  std::vector<double> reals_;
  std::vector<std::int64_t> ints_;
  std::vector<std::string> cats_;
  std::vector<std::uint8_t> present_;
};

struct YearRange {
  int first = 2001;
  int last = 2019;
};

class PanelDataset;

/// Read-only view of one person-year row.
class ObservationRef {
 public:
  ObservationRef(const PanelDataset& ds, std::size_t row) : ds_(&ds), row_(row) {}

  PersonId person_id() const;
  int year() const;
  std::size_t row() const { return row_; }
  Value value(std::string_view column) const;
  std::optional<double> number(std::string_view column) const;
  std::optional<bool> boolean(std::string_view column) const;
  std::optional<std::string_view> category(std::string_view column) const;

 private:
  const PanelDataset* ds_;
  std::size_t row_;
};

/// Immutable long-format panel sorted by (person_id, year). Columns are shared
/// between derived datasets, so copies and column additions are cheap.
class PanelDataset {
 public:
  PanelDataset() = default;

  /// Validates the year range and key uniqueness, then sorts rows by (person, year).
  static PanelDataset from_columns(std::vector<PersonId> persons, std::vector<int> years,
                                   std::vector<Column> columns, YearRange range = {});

  std::size_t rows() const { return persons_ ? persons_->size() : 0; }
  bool empty() const { return rows() == 0; }
  const std::vector<PersonId>& person_ids() const;
  const std::vector<int>& years() const;
  YearRange year_range() const { return range_; }

  Schema schema() const;
  bool has_column(std::string_view name) const;
  /// Throws InputError for an unknown column.
  const Column& column(std::string_view name) const;

  std::optional<std::size_t> find(PersonId person, int year) const;
  ObservationRef row(std::size_t r) const { return ObservationRef(*this, r); }

  /// Adds a column, or replaces one of the same name.
  PanelDataset with_column(Column column) const;
  PanelDataset select_rows(std::span<const std::size_t> rows) const;
  std::size_t person_count() const;

  bool operator==(const PanelDataset& other) const;

 private:
  std::shared_ptr<const std::vector<PersonId>> persons_;
  std::shared_ptr<const std::vector<int>> years_;
  std::vector<std::shared_ptr<const Column>> columns_;
  std::map<std::string, std::size_t, std::less<>> column_index_;
  YearRange range_;
};

struct IngestReport {
  std::size_t rows = 0;
  std::size_t missing_count = 0;      // empty, NA, and unparseable cells
  std::size_t unparseable_count = 0;  // subset of missing_count
  std::map<std::string, std::size_t> missing_by_column;
};

struct IngestResult {
  PanelDataset data;
  IngestReport report;
};

/// Reads a comma-separated file with a header row. `schema` lists the columns to
/// load besides `person_id` and `year`; extra file columns are ignored.
IngestResult ingest_csv(const std::string& path, const Schema& schema, YearRange range = {});
IngestResult ingest_csv_text(std::string_view text, const Schema& schema, YearRange range = {});

/// Header names of a CSV file (first line only).
std::vector<std::string> read_csv_header(const std::string& path);

void write_csv(const PanelDataset& ds, const std::string& path);
std::string to_csv(const PanelDataset& ds);

/// Adds `<column>_lag<k>`: value at (i, t-k) when that person-year exists, else missing.
PanelDataset lag(const PanelDataset& ds, std::string_view column, int k);

/// Three strictly consecutive calendar years of one person; event is the third year.
struct Window {
  PersonId person_id = 0;
  std::array<int, 3> years{};
  std::array<std::size_t, 3> rows{};  // row positions in the source dataset
  static constexpr std::array<int, 3> event_times{-2, -1, 0};

  int event_year() const { return years[2]; }
};

/// Every length-3 run of consecutive years with `required_columns` present in all
/// three rows, sorted by (person_id, event_year).
std::vector<Window> consecutive_windows(const PanelDataset& ds,
                                        std::span<const std::string> required_columns);

PanelDataset subset(const PanelDataset& ds, const std::function<bool(const ObservationRef&)>& keep);

}  // namespace hsdid
