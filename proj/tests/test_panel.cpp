#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "wfm/panel.hpp"

using namespace wfm;

namespace {

std::vector<double> tcode(std::vector<double> x, int code) { return apply_tcode(x, transform_code(code)); }

IngestResult ingest(const std::string& text, Orientation o = Orientation::series_in_rows) {
  std::istringstream in(text);
  return ingest_csv(in, o);
}

}  // namespace

TEST(TransformCode, FirstDifferences) {
  EXPECT_EQ(tcode({1, 3, 6, 10}, 2), (std::vector<double>{2, 3, 4}));
}

TEST(TransformCode, SecondLogDifferenceOfExponentials) {
  const auto out = tcode({1.0, std::exp(1.0), std::exp(3.0), std::exp(6.0)}, 6);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_NEAR(out[0], 1.0, 1e-12);
  EXPECT_NEAR(out[1], 1.0, 1e-12);
}

TEST(TransformCode, LogDifferenceOfGeometricSeriesIsConstant) {
  std::vector<double> x;
  for (int t = 0; t < 12; ++t) x.push_back(2.5 * std::pow(1.07, t));
  for (double v : tcode(x, 5)) EXPECT_NEAR(v, std::log(1.07), 1e-12);
}

TEST(TransformCode, LevelIsIdentity) {
  const std::vector<double> x{0.3, -2.0, 7.5, 1e-9};
  EXPECT_EQ(tcode(x, 1), x);
}

TEST(TransformCode, SecondDifferenceComposesFirst) {
  const Eigen::MatrixXd r = testutil::random_matrix(1, 30, 3);
  std::vector<double> x(r.data(), r.data() + r.size());
  EXPECT_EQ(tcode(x, 3), tcode(tcode(x, 2), 2));
}

TEST(TransformCode, OutputLengthsFollowDifferencingOrder) {
  const std::vector<double> x{1, 2, 4, 8, 16, 32};
  const std::size_t expect[] = {6, 5, 4, 6, 5, 4, 4};
  for (int c = 1; c <= 7; ++c) {
    EXPECT_EQ(tcode(x, c).size(), expect[c - 1]) << "code " << c;
    EXPECT_EQ(static_cast<std::size_t>(differencing_order(transform_code(c))), 6 - expect[c - 1]);
  }
}

TEST(TransformCode, LogAndGrowthCodes) {
  const std::vector<double> x{1, 2, 4, 12};
  const auto lg = tcode(x, 4);
  EXPECT_NEAR(lg[2], std::log(4.0), 1e-15);
  // growth rates 1, 1, 2 -> differences 0, 1
  EXPECT_EQ(tcode(x, 7), (std::vector<double>{0.0, 1.0}));
}

TEST(TransformCode, NonpositiveUnderLogNamesIndex) {
  try {
    tcode({1.0, 2.0, 0.0, 3.0}, 5);
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("index 2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(tcode({1.0, -1.0, 2.0}, 7), DomainError);
  EXPECT_THROW(tcode({-1.0, 1.0, 2.0}, 4), DomainError);
  EXPECT_NO_THROW(tcode({-1.0, 1.0, 2.0}, 2));
}

TEST(TransformCode, RejectsShortSeriesAndBadCodes) {
  EXPECT_THROW(tcode({1.0, 2.0}, 1), DomainError);
  EXPECT_THROW(transform_code(0), DomainError);
  EXPECT_THROW(transform_code(8), DomainError);
}

TEST(AlignAndTrim, UniformLevelCodesDropFirstTwoColumns) {
  const Eigen::MatrixXd x = testutil::random_matrix(4, 120, 5);
  const std::vector<TransformCode> codes(4, TransformCode::level);
  const Panel out = align_and_trim(Panel::from_matrix(x), codes);
  ASSERT_EQ(out.t(), 118);
  EXPECT_EQ(out.values, x.rightCols(118));
  EXPECT_EQ(out.time_ids.front(), "3");
  EXPECT_EQ(out.time_ids.back(), "120");
}

TEST(AlignAndTrim, MixedCodesHandComputed) {
  // Row 0 level, row 1 first difference of squares, row 2 second difference of cubes.
  Eigen::MatrixXd x(3, 12);
  for (int t = 0; t < 12; ++t) {
    x(0, t) = 10.0 + t;
    x(1, t) = t * t;
    x(2, t) = t * t * t;
  }
  const std::vector<TransformCode> codes{TransformCode::level, TransformCode::diff, TransformCode::diff2};
  const Panel out = align_and_trim(Panel::from_matrix(x), codes);
  ASSERT_EQ(out.t(), 10);
  for (int j = 0; j < 10; ++j) {
    const int t = j + 2;  // period index in the original sample
    EXPECT_EQ(out.values(0, j), 10.0 + t);
    EXPECT_EQ(out.values(1, j), 2.0 * t - 1.0);  // t^2 - (t-1)^2
    EXPECT_EQ(out.values(2, j), 6.0 * t - 6.0);  // second difference of t^3
  }
  EXPECT_EQ(out.time_ids.front(), "3");
}

TEST(AlignAndTrim, TooShortAfterTrimming) {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(2, 10) + testutil::random_matrix(2, 10, 1).cwiseAbs();
  const std::vector<TransformCode> codes{TransformCode::diff, TransformCode::log_diff2};
  try {
    align_and_trim(Panel::from_matrix(x), codes);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("insufficient sample"), std::string::npos);
  }
  EXPECT_THROW(align_and_trim(Panel::from_matrix(x), std::vector<TransformCode>(3, TransformCode::level)), Error);
}

TEST(Standardize, SmallRow) {
  Eigen::MatrixXd x(1, 3);
  x << 1, 2, 3;
  const Panel p = standardize(Panel::from_matrix(x));
  EXPECT_NEAR(p.values(0, 0), -1.0, 1e-15);
  EXPECT_NEAR(p.values(0, 1), 0.0, 1e-15);
  EXPECT_NEAR(p.values(0, 2), 1.0, 1e-15);
  EXPECT_TRUE(p.standardized);
}

TEST(Standardize, MomentsAndIdempotence) {
  const Eigen::MatrixXd x = (testutil::random_matrix(20, 50, 9) * 3.0).array() + 5.0;
  const Panel p = standardize(Panel::from_matrix(x));
  EXPECT_TRUE(is_standardized(p.values));
  const RowMoments m = row_moments(p.values);
  EXPECT_LT(m.mean.cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((m.sd.array().square() - 1.0).abs().maxCoeff(), 1e-8);
  const Panel q = standardize(p);
  EXPECT_LT((q.values - p.values).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Standardize, ConstantSeriesNamed) {
  Eigen::MatrixXd x = testutil::random_matrix(3, 6, 2);
  x.row(1).setConstant(4.2);
  Panel p = Panel::from_matrix(x);
  p.series_ids[1] = "FLAT";
  try {
    standardize(p);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("FLAT"), std::string::npos);
  }
}

TEST(IngestCsv, DenseFileIsBitExact) {
  const auto r = ingest("series,2000Q1,2000Q2,2000Q3,2000Q4\n"
                        "a,1.5,-2.25,3e-7,0.1\n"
                        "b,4,5,6,7\n"
                        "c,0.30000000000000004,1e300,-0,8.125\n");
  ASSERT_EQ(r.panel.n(), 3);
  ASSERT_EQ(r.panel.t(), 4);
  EXPECT_TRUE(r.dropped.empty());
  EXPECT_EQ(r.panel.values(0, 2), 3e-7);
  EXPECT_EQ(r.panel.values(0, 3), 0.1);
  EXPECT_EQ(r.panel.values(2, 0), 0.30000000000000004);
  EXPECT_EQ(r.panel.values(2, 1), 1e300);
  EXPECT_EQ(r.panel.time_ids[3], "2000Q4");
  EXPECT_EQ(r.panel.series_ids[1], "b");
  EXPECT_FALSE(r.panel.group_ids);
  EXPECT_FALSE(r.tcodes);
}

TEST(IngestCsv, DuplicateSeries) {
  try {
    ingest("series,1,2,3\nx,1,2,3\ny,1,2,3\nx,4,5,6\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("duplicate series"), std::string::npos);
    EXPECT_EQ(e.line(), 4u);
  }
  EXPECT_THROW(ingest("date,x,x\n1,2,3\n2,3,4\n", Orientation::series_in_columns), ParseError);
}

TEST(IngestCsv, StructuralErrors) {
  EXPECT_THROW(ingest(""), ParseError);
  EXPECT_THROW(ingest("\n\n"), ParseError);
  EXPECT_THROW(ingest("series,1\na,1\n"), ParseError);
  try {
    ingest("series,1,2,3\na,1,2,3\nb,1,2\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(ingest("series,1,2\na,,\nb,x,1\n"), ParseError);  // nothing survives
  EXPECT_THROW(ingest("series,tcode,1,2,3\na,9,1,2,3\n"), ParseError);
}

TEST(IngestCsv, GapsDropWholeSeries) {
  // 181 series in FRED-QD layout with group and tcode columns; two have gaps.
  std::ostringstream f;
  f << "series,group,tcode";
  for (int t = 0; t < 40; ++t) f << ",19" << 60 + t / 4 << ":Q" << t % 4 + 1;
  f << '\n';
  for (int i = 0; i < 181; ++i) {
    f << "S" << i << ',' << 1 + i % 13 << ',' << 1 + i % 7;
    for (int t = 0; t < 40; ++t) {
      f << ',';
      if ((i == 17 && t == 5) || (i == 150 && t == 39)) continue;  // empty cells
      f << 100.0 + i + 0.25 * t;
    }
    f << '\n';
  }
  const auto r = ingest(f.str());
  EXPECT_EQ(r.panel.n(), 179);
  EXPECT_EQ(r.panel.t(), 40);
  ASSERT_EQ(r.dropped.size(), 2u);
  EXPECT_EQ(r.dropped[0].name, "S17");
  EXPECT_EQ(r.dropped[1].name, "S150");
  EXPECT_NE(r.dropped[0].reason.find("missing"), std::string::npos);
  ASSERT_TRUE(r.panel.group_ids);
  ASSERT_TRUE(r.tcodes);
  EXPECT_EQ(r.tcodes->size(), 179u);
  EXPECT_EQ((*r.panel.group_ids)[17], 1 + 18 % 13);  // S18 moved up to index 17
  EXPECT_EQ(static_cast<int>((*r.tcodes)[17]), 1 + 18 % 7);
  EXPECT_EQ(r.panel.values(17, 0), 118.0);
}

TEST(IngestCsv, UnparseableCellIsDropped) {
  const auto r = ingest("series,1,2,3\na,1,2,3\nb,1,NA,3\nc,1,inf,2\n");
  EXPECT_EQ(r.panel.n(), 1);
  ASSERT_EQ(r.dropped.size(), 2u);
  EXPECT_NE(r.dropped[0].reason.find("unparseable"), std::string::npos);
}

TEST(IngestCsv, ColumnOrientationWithMetadataRows) {
  const auto r = ingest("date,GDP,\"CPI, all\"\n"
                        "group,1,6\n"
                        "tcode,5,6\n"
                        "1960Q1,1,2\n"
                        "1960Q2,3,4\n"
                        "1960Q3,5,6\n",
                        Orientation::series_in_columns);
  ASSERT_EQ(r.panel.n(), 2);
  EXPECT_EQ(r.panel.series_ids[1], "CPI, all");
  EXPECT_EQ(r.panel.time_ids, (std::vector<std::string>{"1960Q1", "1960Q2", "1960Q3"}));
  EXPECT_EQ(r.panel.values(1, 2), 6.0);
  EXPECT_EQ((*r.panel.group_ids)[1], 6);
  EXPECT_EQ((*r.tcodes)[0], TransformCode::log_diff);
}

TEST(IngestCsv, HandlesBomCrlfAndBlankLines) {
  const auto r = ingest("\xEF\xBB\xBFseries,1,2\r\n\r\na,1,2\r\nb,3,4\r\n");
  EXPECT_EQ(r.panel.series_ids[0], "a");
  EXPECT_EQ(r.panel.values(1, 1), 4.0);
}

TEST(IngestCsv, WriteThenReadRoundTripsBitExactly) {
  Panel p = Panel::from_matrix(testutil::random_matrix(7, 13, 77) * 1e3);
  p.values(0, 0) = 5e-324;
  p.values(1, 1) = -1.7976931348623157e308;
  p.series_ids[2] = "has,comma";
  p.series_ids[3] = "has \"quote\"";
  p.group_ids = std::vector<int>{1, 2, 3, 4, 5, 6, 7};
  const std::vector<TransformCode> codes(7, TransformCode::log_diff);
  std::ostringstream out;
  write_csv(out, p, codes);
  const auto r = ingest(out.str());
  EXPECT_EQ(r.panel.values, p.values);
  EXPECT_EQ(r.panel.series_ids, p.series_ids);
  EXPECT_EQ(r.panel.time_ids, p.time_ids);
  EXPECT_EQ(*r.panel.group_ids, *p.group_ids);
  EXPECT_EQ(*r.tcodes, codes);
}

TEST(Panel, ValidateAndSlice) {
  Panel p = Panel::from_matrix(testutil::random_matrix(3, 8, 4));
  EXPECT_NO_THROW(p.validate());
  const Panel s = p.time_slice(2, 4);
  EXPECT_EQ(s.t(), 4);
  EXPECT_EQ(s.time_ids.front(), "3");
  EXPECT_EQ(s.values, p.values.middleCols(2, 4));
  p.values(1, 1) = std::nan("");
  EXPECT_THROW(p.validate(), Error);
  p = Panel::from_matrix(testutil::random_matrix(3, 8, 4));
  p.series_ids.pop_back();
  EXPECT_THROW(p.validate(), Error);
}
