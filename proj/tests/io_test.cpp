#include <gtest/gtest.h>

#include "singlq/io.hpp"
#include "singlq/tracking_example.hpp"

namespace singlq {
namespace {

Json tracking_json() {
  ProblemFile pf;
  pf.mode = ProblemFile::Mode::kOocp;
  pf.oocp = tracking_oocp();
  return problem_to_json(pf);
}

ErrorCode parse_code(const Json& j) {
  try {
    parse_problem(j);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInvalidArgument;
}

std::string parse_message(const Json& j) {
  try {
    parse_problem(j);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

TEST(ProblemFile, RoundTrip) {
  const Json j = tracking_json();
  const ProblemFile pf = parse_problem(j);
  EXPECT_EQ(problem_to_json(pf).dump(), j.dump());
  const Oocp o = pf.transformed();
  EXPECT_TRUE(o.A.isApprox(tracking_oocp().A));
  EXPECT_EQ(o.disturbance.modes().size(), 1u);
  EXPECT_EQ(o.disturbance.modes()[0].coef(0), 4.0);

  Json raw = j;
  raw["mode"] = "raw";
  raw["matrices"].erase("H");
  const ProblemFile pr = parse_problem(raw);
  EXPECT_EQ(pr.mode, ProblemFile::Mode::kRaw);
  EXPECT_EQ(problem_to_json(pr).dump(), raw.dump());
  EXPECT_TRUE(pr.raw.D.isApprox(tracking_raw().D));
}

TEST(ProblemFile, RejectsUnknownFields) {
  Json j = tracking_json();
  j["extra"] = 1;
  EXPECT_EQ(parse_code(j), ErrorCode::kParseError);
  j = tracking_json();
  j["dimensions"]["m"] = 3;
  EXPECT_NE(parse_message(j).find("dimensions.m"), std::string::npos);
  j = tracking_json();
  j["disturbance"][0]["phase"] = 0.0;
  EXPECT_EQ(parse_code(j), ErrorCode::kParseError);
}

TEST(ProblemFile, LengthChecksNameTheField) {
  Json j = tracking_json();
  j["initial_state"] = {1.0};
  EXPECT_NE(parse_message(j).find("initial_state"), std::string::npos);
  j = tracking_json();
  j["matrices"]["A"][1] = {0.0};
  EXPECT_NE(parse_message(j).find("matrices.A[1]"), std::string::npos);
  j = tracking_json();
  j["disturbance"][0]["rate"] = -1.0;
  EXPECT_NE(parse_message(j).find("disturbance[0].rate"), std::string::npos);
}

TEST(ProblemFile, NonSymmetricDIsParseError) {
  Json j = tracking_json();
  j["matrices"]["D"][0][1] = 0.5;
  EXPECT_EQ(parse_code(j), ErrorCode::kParseError);
  EXPECT_NE(parse_message(j).find("matrices.D"), std::string::npos);
}

TEST(ProblemFile, MalformedText) {
  try {
    parse_problem_text("{not json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
  }
  EXPECT_THROW(load_problem("/nonexistent/problem.json"), Error);
}

TEST(SolutionBundle, Deterministic) {
  const Oocp o = tracking_oocp();
  const ReducedSolution rs = solve_reduced(o);
  const std::string a = solution_bundle(o, solve_pccp(o, 0.1), rs).dump(2);
  const std::string b = solution_bundle(o, solve_pccp(o, 0.1), solve_reduced(o)).dump(2);
  EXPECT_EQ(a, b);
  const Json j = Json::parse(a);
  EXPECT_NEAR(j["reduced"]["Jbar"].get<double>(), rs.Jbar, 0.0);
  EXPECT_EQ(j["cheap"]["P"].size(), 2u);
}

}  // namespace
}  // namespace singlq
