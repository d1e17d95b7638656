#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "subpot/model_io.hpp"
#include "subpot/output.hpp"

using namespace subpot;

TEST(ModelIo, ParsesSample) {
  auto m = load_model("samples/delta1.json");
  EXPECT_DOUBLE_EQ(m.drift(), 1.0);
  ASSERT_EQ(m.atoms().size(), 1u);
  EXPECT_TRUE(m.atoms()[0].loc.exact);
}

TEST(ModelIo, DecimalLocationsAreExact) {
  auto m = model_from_json(json::parse(R"({"drift": 2, "atoms": [{"x": 0.7, "mass": 1}, {"x": "5/3", "mass": 2}]})"));
  EXPECT_EQ(*m.atoms()[0].loc.exact, (Rational{7, 10}));
  EXPECT_EQ(*m.atoms()[1].loc.exact, (Rational{5, 3}));
}

TEST(ModelIo, ViolationsCarryPointers) {
  try {
    model_from_json(json::parse(R"({"drift": 0, "atoms": [{"x": 1, "mass": -1}], "ac": {"kind": "stable", "C": 1, "alpha": 1.2}})"));
    FAIL();
  } catch (const ModelError& e) {
    std::vector<std::string> inv;
    for (const auto& v : e.violations()) inv.push_back(v.pointer + " " + v.invariant);
    EXPECT_NE(std::find(inv.begin(), inv.end(), "/drift drift > 0"), inv.end());
    EXPECT_NE(std::find(inv.begin(), inv.end(), "/atoms/0/mass atom mass > 0"), inv.end());
    EXPECT_NE(std::find(inv.begin(), inv.end(), "/ac/alpha alpha in (0,1)"), inv.end());
  }
}

TEST(ModelIo, MissingDriftAndBadKind) {
  try {
    model_from_json(json::parse(R"({"ac": {"kind": "gamma"}})"));
    FAIL();
  } catch (const ModelError& e) {
    ASSERT_GE(e.violations().size(), 2u);
    EXPECT_EQ(e.violations()[0].pointer, "/drift");
  }
}

TEST(ModelIo, ParseAndIoErrors) {
  EXPECT_THROW(load_model("no/such/file.json"), ValidationError);
  auto p = std::filesystem::temp_directory_path() / "subpot_bad.json";
  std::ofstream(p) << "{not json";
  try {
    load_model(p.string());
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.code(), "parse");
  }
}

TEST(ModelIo, RoundTrip) {
  auto m = load_model("samples/mixed.json");
  auto again = model_from_json(model_to_json(m));
  EXPECT_EQ(m.hash(), again.hash());
}

TEST(ModelIo, ParsePoint) {
  EXPECT_EQ(*parse_point("3/2").exact, (Rational{3, 2}));
  EXPECT_FALSE(parse_point("1e-3").exact && false);
  EXPECT_THROW(parse_point("x"), ValidationError);
}

TEST(Output, FixedFormatting) {
  EXPECT_EQ(fmt_num(0.5), "5.000000000000e-01");
  EXPECT_EQ(fmt_num(std::nan("")), "nan");
  CsvTable t({"a", "b"});
  t.add({"1", "2"});
  EXPECT_EQ(t.str(), "a,b\n1,2\n");
  EXPECT_THROW(t.add({"1"}), DomainError);
}

TEST(Output, AtomicWriteReplacesFile) {
  auto p = (std::filesystem::temp_directory_path() / "subpot_out.csv").string();
  atomic_write(p, "one\n");
  atomic_write(p, "two\n");
  std::ifstream in(p);
  std::string s;
  std::getline(in, s);
  EXPECT_EQ(s, "two");
}
