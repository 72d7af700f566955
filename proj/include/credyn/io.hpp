/*
 * Copyright 2026 The credyn Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <unistd.h>

#include "credyn/common.hpp"
#include "credyn/feature_matrix.hpp"
#include "credyn/graph.hpp"
#include "credyn/graphstats.hpp"
#include "credyn/panel.hpp"

namespace credyn::io {

// Shortest round-trip text for a double; missing values become "".
inline std::string format_double(double v) {
  if (is_missing(v)) return {};
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

// Line-oriented CSV reader tracking 1-based line numbers for errors.
class CsvReader {
 public:
  explicit CsvReader(const std::filesystem::path& path) : path_(path.string()), in_(path) {
    if (!std::filesystem::exists(path)) throw Error("missing input file: " + path_);
    if (!in_) throw Error("cannot open input file: " + path_);
  }

  bool next() {
    if (!std::getline(in_, line_)) return false;
    ++line_no_;
    if (!line_.empty() && line_.back() == '\r') line_.pop_back();
    fields_ = split_csv(line_);
    return true;
  }

  const std::string& line() const { return line_; }
  std::size_t line_no() const { return line_no_; }
  const std::vector<std::string_view>& fields() const { return fields_; }
  std::string_view field(std::size_t i) const { return fields_[i]; }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(path_, line_no_, what); }

  void expect_fields(std::size_t n) const {
    if (fields_.size() != n)
      fail("expected " + std::to_string(n) + " fields, found " + std::to_string(fields_.size()));
  }

  void expect_header(std::initializer_list<std::string_view> names) {
    if (!next()) fail("empty file");
    std::size_t i = 0;
    if (fields_.size() != names.size()) fail("unexpected header");
    for (auto n : names)
      if (fields_[i++] != n) fail("unexpected header column '" + std::string(fields_[i - 1]) + "'");
  }

  double real(std::size_t i, bool allow_missing = false) const {
    const auto s = fields_[i];
    if (s.empty()) {
      if (allow_missing) return kMissing;
      fail("empty numeric field " + std::to_string(i + 1));
    }
    double v = 0.0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
      fail("malformed number '" + std::string(s) + "'");
    return v;
  }

  long long integer(std::size_t i) const {
    const auto s = fields_[i];
    long long v = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size())
      fail("malformed integer '" + std::string(s) + "'");
    return v;
  }

 private:
  std::string path_;
  std::ifstream in_;
  std::string line_;
  std::size_t line_no_ = 0;
  std::vector<std::string_view> fields_;
};

// Writes through a temporary sibling file and renames it into place, so
// readers never observe a partial file.
inline void atomic_write(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    body(out);
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("cannot rename into " + path.string() + ": " + ec.message());
  }
}

inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  atomic_write(path, [&](std::ostream& o) { o << content; });
}

// ---- panel ----------------------------------------------------------------

inline void write_panel(std::ostream& o, const BorrowerPanel& p) {
  o << "borrower_id,kind,month,debt_consumer,debt_commercial,debt_mortgage,revolving_amount,"
       "dpd_bucket,has_active_loan\n";
  for (const auto& r : p.records())
    for (const auto& s : r.months) {
      if (!s) continue;
      o << r.id << ',' << to_string(r.kind) << ',' << s->month << ',' << format_double(s->debt_consumer) << ','
        << format_double(s->debt_commercial) << ',' << format_double(s->debt_mortgage) << ','
        << format_double(s->revolving_amount) << ',' << to_string(s->dpd_bucket) << ','
        << (s->has_active_loan ? 1 : 0) << '\n';
    }
}

inline void write_cohort(std::ostream& o, const BorrowerPanel& p) {
  o << "borrower_id,origination_month\n";
  for (const auto& c : p.cohort()) o << c.id << ',' << c.origination_month << '\n';
}

// Reads a panel CSV; the horizon is the largest month present. The cohort
// file is optional.
inline BorrowerPanel read_panel(const std::filesystem::path& panel_csv,
                                const std::optional<std::filesystem::path>& cohort_csv = std::nullopt) {
  struct Row {
    std::string id;
    NodeKind kind;
    MonthlyFinancialState s;
  };
  std::vector<Row> rows;
  int horizon = 0;
  {
    CsvReader in(panel_csv);
    in.expect_header({"borrower_id", "kind", "month", "debt_consumer", "debt_commercial", "debt_mortgage",
                      "revolving_amount", "dpd_bucket", "has_active_loan"});
    while (in.next()) {
      if (in.line().empty()) continue;
      in.expect_fields(9);
      Row r;
      r.id = std::string(in.field(0));
      if (r.id.empty()) in.fail("empty borrower_id");
      const auto kind = parse_node_kind(in.field(1));
      if (!kind) in.fail("unknown kind '" + std::string(in.field(1)) + "'");
      r.kind = *kind;
      const auto month = in.integer(2);
      if (month < 1 || month > 100000) in.fail("month out of range");
      r.s.month = static_cast<int>(month);
      r.s.debt_consumer = in.real(3);
      r.s.debt_commercial = in.real(4);
      r.s.debt_mortgage = in.real(5);
      r.s.revolving_amount = in.real(6);
      const auto b = parse_dpd_bucket(in.field(7));
      if (!b) in.fail("unknown dpd_bucket '" + std::string(in.field(7)) + "'");
      r.s.dpd_bucket = *b;
      const auto act = in.field(8);
      if (act != "0" && act != "1") in.fail("has_active_loan must be 0 or 1");
      r.s.has_active_loan = act == "1";
      horizon = std::max(horizon, r.s.month);
      rows.push_back(std::move(r));
    }
  }
  BorrowerPanel panel(horizon);
  for (auto& r : rows) {
    const auto rec = panel.add_borrower(r.id, r.kind);
    panel.set_state(rec, r.s);
  }
  if (cohort_csv) {
    CsvReader in(*cohort_csv);
    in.expect_header({"borrower_id", "origination_month"});
    while (in.next()) {
      if (in.line().empty()) continue;
      in.expect_fields(2);
      const std::string id(in.field(0));
      if (!panel.find(id)) in.fail("cohort member " + id + " not in panel");
      panel.add_cohort_member({id, static_cast<int>(in.integer(1))});
    }
  }
  return panel;
}

// ---- networks ---------------------------------------------------------------

inline void write_nodes(std::ostream& o, const SocialGraph& g) {
  o << "node_id,kind\n";
  for (const auto& n : g.nodes()) o << n.id << ',' << to_string(n.kind) << '\n';
}

inline void write_edges(std::ostream& o, const SocialGraph& g) {
  o << "src,dst,edge_type,valid_from,valid_to\n";
  for (const auto& e : g.edges()) {
    o << g.nodes()[e.src].id << ',' << g.nodes()[e.dst].id << ',' << to_string(e.type) << ',';
    if (e.valid_from) o << *e.valid_from;
    o << ',';
    if (e.valid_to) o << *e.valid_to;
    o << '\n';
  }
}

// Reads a network from its edge list. Isolated nodes are only known through
// the optional node list; endpoint kinds come from the node list, then the
// panel, then default to PERSON.
inline SocialGraph read_graph(std::string name, const std::filesystem::path& edges_csv,
                              const std::optional<std::filesystem::path>& nodes_csv = std::nullopt,
                              const BorrowerPanel* panel = nullptr) {
  SocialGraph g(std::move(name));
  if (nodes_csv) {
    CsvReader in(*nodes_csv);
    in.expect_header({"node_id", "kind"});
    while (in.next()) {
      if (in.line().empty()) continue;
      in.expect_fields(2);
      const auto kind = parse_node_kind(in.field(1));
      if (!kind) in.fail("unknown kind '" + std::string(in.field(1)) + "'");
      if (g.find(in.field(0))) in.fail("duplicate node '" + std::string(in.field(0)) + "'");
      g.add_node(std::string(in.field(0)), *kind);
    }
  }
  auto kind_of = [&](const std::string& id) {
    if (panel)
      if (auto r = panel->find(id)) return panel->records()[*r].kind;
    return NodeKind::kPerson;
  };
  CsvReader in(edges_csv);
  in.expect_header({"src", "dst", "edge_type", "valid_from", "valid_to"});
  while (in.next()) {
    if (in.line().empty()) continue;
    in.expect_fields(5);
    const std::string src(in.field(0)), dst(in.field(1));
    if (src.empty() || dst.empty()) in.fail("empty edge endpoint");
    const auto type = parse_edge_type(in.field(2));
    if (!type) in.fail("unknown edge_type '" + std::string(in.field(2)) + "'");
    Edge e;
    e.src = g.ensure_node(src, kind_of(src));
    e.dst = g.ensure_node(dst, kind_of(dst));
    e.type = *type;
    if (!in.field(3).empty()) e.valid_from = static_cast<int>(in.integer(3));
    if (!in.field(4).empty()) e.valid_to = static_cast<int>(in.integer(4));
    if (e.valid_from && e.valid_to && *e.valid_from > *e.valid_to) in.fail("valid_from after valid_to");
    g.add_edge(e);
  }
  return g;
}

inline void write_node_stats_header(std::ostream& o) {
  o << "node_id,month,degree,degree_centrality,triangle_count,pagerank,hits_authority,hits_hub,"
       "is_articulation_point\n";
}

inline void write_node_stats_rows(std::ostream& o, const SocialGraph& g, int month,
                                  const std::vector<graphstats::NodeStatsRow>& rows) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    o << g.nodes()[i].id << ',' << month << ',' << r.degree << ',' << format_double(r.degree_centrality) << ','
      << r.triangle_count << ',' << format_double(r.pagerank) << ',' << format_double(r.hits_authority) << ','
      << format_double(r.hits_hub) << ',' << (r.is_articulation_point ? 1 : 0) << '\n';
  }
}

// ---- feature matrices -------------------------------------------------------

// First line "#group,<group per column>", then the header and the rows.
inline void write_feature_matrix(std::ostream& o, const FeatureMatrix& m, std::span<const int> labels = {}) {
  const bool with_label = !labels.empty();
  if (with_label && labels.size() != m.rows()) throw SchemaError("label count does not match rows");
  o << "#group";
  if (with_label) o << ",LABEL";
  for (const auto& c : m.columns) o << ',' << to_string(c.group);
  o << "\nborrower_id";
  if (with_label) o << ",label";
  for (const auto& c : m.columns) o << ',' << c.name;
  o << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    o << m.row_ids[r];
    if (with_label) o << ',' << labels[r];
    for (const auto& c : m.columns) o << ',' << format_double(c.values[r]);
    o << '\n';
  }
}

struct LabeledMatrix {
  FeatureMatrix matrix;
  std::vector<int> labels;  // empty when the file has no label column
};

inline LabeledMatrix read_feature_matrix(const std::filesystem::path& path) {
  CsvReader in(path);
  if (!in.next() || in.fields().empty() || in.field(0) != "#group") in.fail("missing #group metadata line");
  std::vector<std::string> groups(in.fields().begin() + 1, in.fields().end());
  if (!in.next() || in.fields().empty() || in.field(0) != "borrower_id") in.fail("missing header line");
  if (in.fields().size() != groups.size() + 1) in.fail("header and group line differ in width");
  const bool with_label = !groups.empty() && groups[0] == "LABEL";
  if (with_label && in.field(1) != "label") in.fail("label column expected");
  LabeledMatrix out;
  const std::size_t first = with_label ? 1 : 0;
  for (std::size_t j = first; j < groups.size(); ++j) {
    const auto g = parse_feature_group(groups[j]);
    if (!g) in.fail("unknown feature group '" + groups[j] + "'");
    out.matrix.columns.push_back({std::string(in.field(j + 1)), *g, {}});
  }
  const std::size_t width = groups.size() + 1;
  while (in.next()) {
    if (in.line().empty()) continue;
    in.expect_fields(width);
    out.matrix.row_ids.emplace_back(in.field(0));
    if (with_label) {
      const auto y = in.integer(1);
      if (y != 0 && y != 1) in.fail("label must be 0 or 1");
      out.labels.push_back(static_cast<int>(y));
    }
    for (std::size_t j = first; j < groups.size(); ++j)
      out.matrix.columns[j - first].values.push_back(in.real(j + 1, true));
  }
  out.matrix.validate();
  return out;
}

}  // namespace credyn::io
