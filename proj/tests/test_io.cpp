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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "credyn/io.hpp"
#include "credyn/synthpop.hpp"

using namespace credyn;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("credyn_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& f) const { return path_ / f; }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

synthpop::Population tiny() {
  synthpop::PopulationConfig c;
  c.n_persons = 300;
  c.n_companies = 60;
  c.cohort_persons = 100;
  c.cohort_companies = 20;
  return synthpop::generate_population(c);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string parse_error(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Io, FormatDoubleRoundTrips) {
  for (double v : {0.0, 1.0, -2.5, 0.1, 1e-300, 123456789.125, 1.0 / 3.0}) {
    const auto s = io::format_double(v);
    EXPECT_EQ(std::stod(s), v) << s;
  }
  EXPECT_EQ(io::format_double(kMissing), "");
}

TEST(Io, PanelRoundTrip) {
  TempDir d;
  const auto pop = tiny();
  io::atomic_write(d / "panel.csv", [&](std::ostream& o) { io::write_panel(o, pop.panel); });
  io::atomic_write(d / "cohort.csv", [&](std::ostream& o) { io::write_cohort(o, pop.panel); });
  const auto back = io::read_panel(d / "panel.csv", d / "cohort.csv");
  EXPECT_TRUE(back == pop.panel);
  for (const auto& e : fs::directory_iterator(d.path()))
    EXPECT_EQ(e.path().filename().string().find(".tmp"), std::string::npos);
}

TEST(Io, GraphRoundTripKeepsIsolatedNodes) {
  TempDir d;
  const auto pop = tiny();
  for (const auto* g : {&pop.eownet, &pop.familynet}) {
    io::atomic_write(d / "e.csv", [&](std::ostream& o) { io::write_edges(o, *g); });
    io::atomic_write(d / "n.csv", [&](std::ostream& o) { io::write_nodes(o, *g); });
    const auto back = io::read_graph(g->name(), d / "e.csv", d / "n.csv", &pop.panel);
    EXPECT_TRUE(back == *g) << g->name();
  }
}

TEST(Io, FeatureMatrixRoundTripWithMissing) {
  TempDir d;
  FeatureMatrix m;
  m.row_ids = {"a", "b", "c"};
  m.columns = {{"fin_x", FeatureGroup::kFin, {1.5, kMissing, -0.25}},
               {"socint_y_mean", FeatureGroup::kSocInt, {kMissing, kMissing, 1e-9}}};
  const std::vector<int> y{0, 1, 0};
  io::atomic_write(d / "m.csv", [&](std::ostream& o) { io::write_feature_matrix(o, m, y); });
  const auto back = io::read_feature_matrix(d / "m.csv");
  EXPECT_EQ(back.labels, y);
  EXPECT_EQ(back.matrix.row_ids, m.row_ids);
  ASSERT_EQ(back.matrix.cols(), 2u);
  for (std::size_t j = 0; j < 2; ++j) {
    EXPECT_EQ(back.matrix.columns[j].name, m.columns[j].name);
    EXPECT_EQ(back.matrix.columns[j].group, m.columns[j].group);
    for (std::size_t r = 0; r < 3; ++r) {
      const double a = m.columns[j].values[r], b = back.matrix.columns[j].values[r];
      EXPECT_TRUE((is_missing(a) && is_missing(b)) || a == b);
    }
  }
}

TEST(Io, MalformedDpdTokenReportsLine) {
  TempDir d;
  const auto pop = tiny();
  std::ostringstream os;
  io::write_panel(os, pop.panel);
  std::istringstream is(os.str());
  std::ofstream out(d / "panel.csv");
  std::string line;
  for (int n = 1; std::getline(is, line); ++n) {
    if (n == 412) line.replace(line.find("CURRENT"), 7, "CURRNT");
    out << line << '\n';
  }
  out.close();
  const auto msg = parse_error([&] { io::read_panel(d / "panel.csv"); });
  EXPECT_NE(msg.find("line 412"), std::string::npos) << msg;
  EXPECT_NE(msg.find("CURRNT"), std::string::npos) << msg;
}

TEST(Io, OtherMalformedRows) {
  TempDir d;
  std::ofstream(d / "p.csv") << "borrower_id,kind,month,debt_consumer,debt_commercial,debt_mortgage,"
                                "revolving_amount,dpd_bucket,has_active_loan\nA,PERSON,1,abc,0,0,0,CURRENT,1\n";
  EXPECT_NE(parse_error([&] { io::read_panel(d / "p.csv"); }).find("line 2"), std::string::npos);
  std::ofstream(d / "q.csv") << "borrower_id,kind\n";
  EXPECT_NE(parse_error([&] { io::read_panel(d / "q.csv"); }).find("line 1"), std::string::npos);
  std::ofstream(d / "e.csv") << "src,dst,edge_type,valid_from,valid_to\nA,B,MARRIAGE,5,3\n";
  EXPECT_NE(parse_error([&] { io::read_graph("FamilyNet", d / "e.csv"); }).find("line 2"), std::string::npos);
}

TEST(Io, MissingFileIsNamed) {
  try {
    io::read_panel("/nonexistent/dir/panel.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/panel.csv"), std::string::npos);
  }
}

TEST(Io, AtomicWriteReplacesWholeFile) {
  TempDir d;
  io::atomic_write(d / "x.txt", std::string("first version\n"));
  io::atomic_write(d / "x.txt", std::string("2\n"));
  EXPECT_EQ(slurp(d / "x.txt"), "2\n");
}
