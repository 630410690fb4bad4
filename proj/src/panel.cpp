#include "hsdid/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "hsdid/error.hpp"

namespace hsdid {

std::string_view to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::Integer: return "integer";
    case ColumnKind::Real: return "real";
    case ColumnKind::Boolean: return "boolean";
    case ColumnKind::Categorical: return "categorical";
  }
  return "unknown";
}

// ---------------------------------------------------------------- Column

Column::Column(std::string name, ColumnKind kind) : name_(std::move(name)), kind_(kind) {}

std::size_t Column::missing_count() const {
  return static_cast<std::size_t>(std::count(present_.begin(), present_.end(), 0));
}

std::optional<double> Column::number(std::size_t row) const {
  if (!present_[row]) return std::nullopt;
  switch (kind_) {
    case ColumnKind::Real: return reals_[row];
    case ColumnKind::Integer:
    case ColumnKind::Boolean: return static_cast<double>(ints_[row]);
    case ColumnKind::Categorical: return std::nullopt;
  }
  return std::nullopt;
}

std::optional<bool> Column::boolean(std::size_t row) const {
  if (!present_[row] || kind_ != ColumnKind::Boolean) return std::nullopt;
  return ints_[row] != 0;
}

std::optional<std::string_view> Column::category(std::size_t row) const {
  if (!present_[row] || kind_ != ColumnKind::Categorical) return std::nullopt;
  return std::string_view(cats_[row]);
}

Value Column::value(std::size_t row) const {
  if (!present_[row]) return Missing{};
  switch (kind_) {
    case ColumnKind::Real: return reals_[row];
    case ColumnKind::Integer: return ints_[row];
    case ColumnKind::Boolean: return ints_[row] != 0;
    case ColumnKind::Categorical: return cats_[row];
  }
  return Missing{};
}

void Column::push_missing() {
  present_.push_back(0);
  switch (kind_) {
    case ColumnKind::Real: reals_.push_back(0.0); break;
    case ColumnKind::Integer:
    case ColumnKind::Boolean: ints_.push_back(0); break;
    case ColumnKind::Categorical: cats_.emplace_back(); break;
  }
}

void Column::push_number(double v) {
  switch (kind_) {
    case ColumnKind::Real: reals_.push_back(v); break;
    case ColumnKind::Integer:
      if (v != std::floor(v)) throw InputError("column '" + name_ + "': non-integer value");
      ints_.push_back(static_cast<std::int64_t>(v));
      break;
    case ColumnKind::Boolean:
      if (v != 0.0 && v != 1.0) throw InputError("column '" + name_ + "': boolean must be 0 or 1");
      ints_.push_back(static_cast<std::int64_t>(v));
      break;
    case ColumnKind::Categorical:
      throw InputError("column '" + name_ + "': number pushed to categorical column");
  }
  present_.push_back(1);
}

void Column::push_bool(bool v) {
  if (kind_ != ColumnKind::Boolean) throw InputError("column '" + name_ + "': not boolean");
  ints_.push_back(v ? 1 : 0);
  present_.push_back(1);
}

void Column::push_category(std::string v) {
  if (kind_ != ColumnKind::Categorical) throw InputError("column '" + name_ + "': not categorical");
  cats_.push_back(std::move(v));
  present_.push_back(1);
}

void Column::push_back(const Value& v) {
  std::visit(
      [this](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Missing>) {
          push_missing();
        } else if constexpr (std::is_same_v<T, bool>) {
          push_bool(x);
        } else if constexpr (std::is_same_v<T, std::string>) {
          push_category(x);
        } else {
          push_number(static_cast<double>(x));
        }
      },
      v);
}

Column Column::renamed(std::string name) const {
  Column out = *this;
  out.name_ = std::move(name);
  return out;
}

Column Column::gather(std::span<const std::size_t> rows) const {
  Column out(name_, kind_);
  out.present_.reserve(rows.size());
  for (std::size_t r : rows) {
    out.present_.push_back(present_[r]);
    switch (kind_) {
      case ColumnKind::Real: out.reals_.push_back(reals_[r]); break;
      case ColumnKind::Integer:
      case ColumnKind::Boolean: out.ints_.push_back(ints_[r]); break;
      case ColumnKind::Categorical: out.cats_.push_back(cats_[r]); break;
    }
  }
  return out;
}

bool Column::operator==(const Column& other) const {
  if (name_ != other.name_ || kind_ != other.kind_ || present_ != other.present_) return false;
  for (std::size_t r = 0; r < size(); ++r) {
    if (!present_[r]) continue;
    if (value(r) != other.value(r)) return false;
  }
  return true;
}

// ---------------------------------------------------------------- ObservationRef

PersonId ObservationRef::person_id() const { return ds_->person_ids()[row_]; }
int ObservationRef::year() const { return ds_->years()[row_]; }
Value ObservationRef::value(std::string_view c) const { return ds_->column(c).value(row_); }
std::optional<double> ObservationRef::number(std::string_view c) const {
  return ds_->column(c).number(row_);
}
std::optional<bool> ObservationRef::boolean(std::string_view c) const {
  return ds_->column(c).boolean(row_);
}
std::optional<std::string_view> ObservationRef::category(std::string_view c) const {
  return ds_->column(c).category(row_);
}

// ---------------------------------------------------------------- PanelDataset

namespace {
const std::vector<PersonId> kNoPersons;
const std::vector<int> kNoYears;
}  // namespace

const std::vector<PersonId>& PanelDataset::person_ids() const {
  return persons_ ? *persons_ : kNoPersons;
}
const std::vector<int>& PanelDataset::years() const { return years_ ? *years_ : kNoYears; }

PanelDataset PanelDataset::from_columns(std::vector<PersonId> persons, std::vector<int> years,
                                        std::vector<Column> columns, YearRange range) {
  const std::size_t n = persons.size();
  if (years.size() != n) throw InputError("person_id and year lengths differ");
  for (const auto& c : columns) {
    if (c.size() != n) throw InputError("column '" + c.name() + "' has wrong length");
  }
  for (int y : years) {
    if (y < range.first || y > range.last) {
      throw InputError("year " + std::to_string(y) + " outside range " +
                       std::to_string(range.first) + "-" + std::to_string(range.last));
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::pair(persons[a], years[a]) < std::pair(persons[b], years[b]);
  });
  for (std::size_t i = 1; i < n; ++i) {
    const auto a = order[i - 1], b = order[i];
    if (persons[a] == persons[b] && years[a] == years[b]) {
      throw InputError("duplicate (person_id, year) = (" + std::to_string(persons[a]) + ", " +
                       std::to_string(years[a]) + ")");
    }
  }
  const bool sorted = std::is_sorted(order.begin(), order.end());

  PanelDataset ds;
  ds.range_ = range;
  std::vector<PersonId> p(n);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = persons[order[i]];
    y[i] = years[order[i]];
  }
  ds.persons_ = std::make_shared<const std::vector<PersonId>>(std::move(p));
  ds.years_ = std::make_shared<const std::vector<int>>(std::move(y));
  for (auto& c : columns) {
    if (ds.column_index_.count(c.name())) throw InputError("duplicate column '" + c.name() + "'");
    ds.column_index_.emplace(c.name(), ds.columns_.size());
    ds.columns_.push_back(
        std::make_shared<const Column>(sorted ? std::move(c) : c.gather(order)));
  }
  return ds;
}

Schema PanelDataset::schema() const {
  Schema s;
  s.reserve(columns_.size());
  for (const auto& c : columns_) s.push_back({c->name(), c->kind()});
  return s;
}

bool PanelDataset::has_column(std::string_view name) const {
  return column_index_.find(name) != column_index_.end();
}

const Column& PanelDataset::column(std::string_view name) const {
  auto it = column_index_.find(name);
  if (it == column_index_.end()) throw InputError("unknown column '" + std::string(name) + "'");
  return *columns_[it->second];
}

std::optional<std::size_t> PanelDataset::find(PersonId person, int year) const {
  const auto& p = person_ids();
  const auto& y = years();
  std::size_t lo = 0, hi = p.size();
  while (lo < hi) {
    std::size_t mid = lo + (hi - lo) / 2;
    if (std::pair(p[mid], y[mid]) < std::pair(person, year)) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  if (lo < p.size() && p[lo] == person && y[lo] == year) return lo;
  return std::nullopt;
}

PanelDataset PanelDataset::with_column(Column column) const {
  if (column.size() != rows()) throw InputError("column '" + column.name() + "' has wrong length");
  PanelDataset out = *this;
  if (!out.persons_) {
    out.persons_ = std::make_shared<const std::vector<PersonId>>();
    out.years_ = std::make_shared<const std::vector<int>>();
  }
  auto ptr = std::make_shared<const Column>(std::move(column));
  auto it = out.column_index_.find(ptr->name());
  if (it != out.column_index_.end()) {
    out.columns_[it->second] = std::move(ptr);
  } else {
    out.column_index_.emplace(ptr->name(), out.columns_.size());
    out.columns_.push_back(std::move(ptr));
  }
  return out;
}

PanelDataset PanelDataset::select_rows(std::span<const std::size_t> rows) const {
  PanelDataset out;
  out.range_ = range_;
  std::vector<PersonId> p;
  std::vector<int> y;
  p.reserve(rows.size());
  y.reserve(rows.size());
  for (std::size_t r : rows) {
    p.push_back(person_ids()[r]);
    y.push_back(years()[r]);
  }
  out.persons_ = std::make_shared<const std::vector<PersonId>>(std::move(p));
  out.years_ = std::make_shared<const std::vector<int>>(std::move(y));
  out.column_index_ = column_index_;
  for (const auto& c : columns_) out.columns_.push_back(std::make_shared<const Column>(c->gather(rows)));
  return out;
}

std::size_t PanelDataset::person_count() const {
  const auto& p = person_ids();
  std::size_t count = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i == 0 || p[i] != p[i - 1]) ++count;
  }
  return count;
}

bool PanelDataset::operator==(const PanelDataset& other) const {
  if (person_ids() != other.person_ids() || years() != other.years()) return false;
  if (columns_.size() != other.columns_.size()) return false;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (!(*columns_[i] == *other.columns_[i])) return false;
  }
  return true;
}

// ---------------------------------------------------------------- CSV

namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool is_missing_token(std::string_view s) { return s.empty() || s == "NA"; }

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  T v{};
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && s.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) return std::nullopt;
  return v;
}

std::optional<bool> parse_bool(std::string_view s) {
  if (s == "1" || s == "true" || s == "TRUE" || s == "True") return true;
  if (s == "0" || s == "false" || s == "FALSE" || s == "False") return false;
  return std::nullopt;
}

std::string quote_if_needed(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_real(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

IngestResult ingest_csv_text(std::string_view text, const Schema& schema, YearRange range) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    if (!trim(line).empty()) lines.push_back(line);
    pos = end + 1;
  }
  if (lines.empty()) throw InputError("CSV has no header row");

  auto header = split_csv_line(lines[0]);
  for (auto& h : header) h = std::string(trim(h));
  if (!header.empty() && header[0].starts_with("\xEF\xBB\xBF")) header[0].erase(0, 3);
  auto locate = [&](std::string_view name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw InputError("missing required column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t person_col = locate("person_id");
  const std::size_t year_col = locate("year");
  std::vector<std::size_t> positions;
  std::vector<Column> columns;
  for (const auto& spec : schema) {
    if (spec.name == "person_id" || spec.name == "year") continue;
    positions.push_back(locate(spec.name));
    columns.emplace_back(spec.name, spec.kind);
  }

  IngestReport report;
  std::vector<PersonId> persons;
  std::vector<int> years;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    auto fields = split_csv_line(lines[li]);
    if (fields.size() != header.size()) {
      throw InputError("line " + std::to_string(li + 1) + ": expected " +
                       std::to_string(header.size()) + " fields, found " +
                       std::to_string(fields.size()));
    }
    auto pid = parse_number<std::int64_t>(trim(fields[person_col]));
    auto yr = parse_number<int>(trim(fields[year_col]));
    if (!pid || !yr) throw InputError("line " + std::to_string(li + 1) + ": unparseable person_id or year");
    persons.push_back(*pid);
    years.push_back(*yr);
    for (std::size_t c = 0; c < columns.size(); ++c) {
      auto cell = trim(fields[positions[c]]);
      auto& col = columns[c];
      bool ok = true;
      if (is_missing_token(cell)) {
        col.push_missing();
        ok = false;
        ++report.missing_count;
        ++report.missing_by_column[col.name()];
        continue;
      }
      switch (col.kind()) {
        case ColumnKind::Real: {
          auto v = parse_number<double>(cell);
          if (v && std::isfinite(*v)) col.push_number(*v); else ok = false;
          break;
        }
        case ColumnKind::Integer: {
          auto v = parse_number<std::int64_t>(cell);
          if (v) col.push_number(static_cast<double>(*v)); else ok = false;
          break;
        }
        case ColumnKind::Boolean: {
          auto v = parse_bool(cell);
          if (v) col.push_bool(*v); else ok = false;
          break;
        }
        case ColumnKind::Categorical: col.push_category(std::string(cell)); break;
      }
      if (!ok) {
        col.push_missing();
        ++report.missing_count;
        ++report.unparseable_count;
        ++report.missing_by_column[col.name()];
      }
    }
  }
  report.rows = persons.size();
  auto ds = PanelDataset::from_columns(std::move(persons), std::move(years), std::move(columns), range);
  return {std::move(ds), std::move(report)};
}

IngestResult ingest_csv(const std::string& path, const Schema& schema, YearRange range) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open input file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return ingest_csv_text(buf.str(), schema, range);
}

std::vector<std::string> read_csv_header(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open input file '" + path + "'");
  std::string line;
  std::getline(in, line);
  auto fields = split_csv_line(line);
  for (auto& f : fields) f = std::string(trim(f));
  if (!fields.empty() && fields[0].starts_with("\xEF\xBB\xBF")) fields[0].erase(0, 3);
  return fields;
}

std::string to_csv(const PanelDataset& ds) {
  std::string out = "person_id,year";
  const auto schema = ds.schema();
  for (const auto& s : schema) out += "," + quote_if_needed(s.name);
  out += "\n";
  std::vector<const Column*> cols;
  for (const auto& s : schema) cols.push_back(&ds.column(s.name));
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    out += std::to_string(ds.person_ids()[r]);
    out += ",";
    out += std::to_string(ds.years()[r]);
    for (const Column* c : cols) {
      out += ",";
      if (c->is_missing(r)) {
        out += "NA";
        continue;
      }
      switch (c->kind()) {
        case ColumnKind::Real: out += format_real(*c->number(r)); break;
        case ColumnKind::Integer:
          out += std::to_string(static_cast<std::int64_t>(*c->number(r)));
          break;
        case ColumnKind::Boolean: out += *c->boolean(r) ? "1" : "0"; break;
        case ColumnKind::Categorical: out += quote_if_needed(*c->category(r)); break;
      }
    }
    out += "\n";
  }
  return out;
}

void write_csv(const PanelDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << to_csv(ds);
}

// ---------------------------------------------------------------- transforms

PanelDataset lag(const PanelDataset& ds, std::string_view column, int k) {
  if (k <= 0) throw InputError("lag order must be positive");
  const Column& src = ds.column(column);
  if (!src.numeric()) throw InputError("lag of non-numeric column '" + std::string(column) + "'");
  Column out(std::string(column) + "_lag" + std::to_string(k), src.kind());
  const auto& persons = ds.person_ids();
  const auto& years = ds.years();
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    // Rows are sorted, so the lagged row (if any) precedes r within the same person.
    std::optional<std::size_t> hit;
    for (std::size_t back = 1; back <= r; ++back) {
      std::size_t q = r - back;
      if (persons[q] != persons[r] || years[q] < years[r] - k) break;
      if (years[q] == years[r] - k) {
        hit = q;
        break;
      }
    }
    if (hit) {
      out.push_back(src.value(*hit));
    } else {
      out.push_missing();
    }
  }
  return ds.with_column(std::move(out));
}

std::vector<Window> consecutive_windows(const PanelDataset& ds,
                                        std::span<const std::string> required_columns) {
  std::vector<const Column*> req;
  for (const auto& name : required_columns) req.push_back(&ds.column(name));
  auto complete = [&](std::size_t r) {
    return std::all_of(req.begin(), req.end(), [r](const Column* c) { return !c->is_missing(r); });
  };
  const auto& persons = ds.person_ids();
  const auto& years = ds.years();
  std::vector<Window> windows;
  for (std::size_t r = 2; r < ds.rows(); ++r) {
    if (persons[r - 2] != persons[r] || persons[r - 1] != persons[r]) continue;
    if (years[r - 1] != years[r] - 1 || years[r - 2] != years[r] - 2) continue;
    if (!complete(r - 2) || !complete(r - 1) || !complete(r)) continue;
    Window w;
    w.person_id = persons[r];
    w.years = {years[r - 2], years[r - 1], years[r]};
    w.rows = {r - 2, r - 1, r};
    windows.push_back(w);
  }
  return windows;
}

PanelDataset subset(const PanelDataset& ds, const std::function<bool(const ObservationRef&)>& keep) {
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    if (keep(ds.row(r))) rows.push_back(r);
  }
  return ds.select_rows(rows);
}

}  // namespace hsdid
