#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "horizon/error.hpp"
#include "horizon/estimator.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace horizon;

namespace {

// White above a horizontal horizon at centered offset rho, black below, with
// the boundary row partially covered. Mean intensity is exactly 0.5 + rho.
Image painted_square(int n, double rho) {
  Image img(n, n, 1, 0.0f);
  const double edge = n * (0.5 - rho);  // rows [0, edge) are sky
  for (int y = 0; y < n; ++y) {
    const float v = static_cast<float>(std::clamp(edge - y, 0.0, 1.0));
    for (int x = 0; x < n; ++x) img.at(x, y) = v;
  }
  return img;
}

std::vector<TrainingExample> solvable_dataset(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  std::vector<TrainingExample> out;
  for (std::size_t i = 0; i < count; ++i) {
    const double rho = u(rng);
    out.push_back({painted_square(64, rho), HorizonLine::from_left_right(rho, rho, 1.0)});
  }
  return out;
}

std::shared_ptr<const LabelSpace> grid_space(std::size_t n) {
  std::vector<double> theta, rho;
  for (std::size_t i = 0; i <= 20 * n; ++i) {
    theta.push_back(kPi / 2 - 0.4 + 0.8 * i / (20.0 * n));
    rho.push_back(-0.6 + 1.2 * i / (20.0 * n));
  }
  return std::make_shared<LabelSpace>(LabelSpace{build_bins(LabelParameter::kTheta, theta, n, true),
                                                 build_bins(LabelParameter::kRho, rho, n)});
}

double relative_gap(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-3});
}

}  // namespace

TEST(Loss, HuberExamples) {
  EXPECT_EQ(huber_loss(0.0).loss, 0.0);
  EXPECT_EQ(huber_loss(0.0).gradient, 0.0);
  EXPECT_DOUBLE_EQ(huber_loss(1.0, 1.0).loss, 0.5);
  EXPECT_DOUBLE_EQ(huber_loss(1.0, 1.0).gradient, 1.0);
  EXPECT_DOUBLE_EQ(huber_loss(3.0, 1.0).loss, 2.5);
  EXPECT_DOUBLE_EQ(huber_loss(3.0, 1.0).gradient, 1.0);
  EXPECT_DOUBLE_EQ(huber_loss(-3.0, 1.0).gradient, -1.0);
  EXPECT_DOUBLE_EQ(huber_loss(0.5, 0.25).loss, 0.25 * (0.5 - 0.125));
}

TEST(Loss, L2Examples) {
  EXPECT_EQ(l2_loss(0.0).loss, 0.0);
  EXPECT_DOUBLE_EQ(l2_loss(2.0).loss, 2.0);
  EXPECT_DOUBLE_EQ(l2_loss(2.0).gradient, 2.0);
}

TEST(Loss, HuberEqualsL2InsideDelta) {
  for (double delta : {0.1, 1.0, 2.5}) {
    for (double x = -delta; x <= delta; x += delta / 97.0) {
      EXPECT_EQ(huber_loss(x, delta).loss, l2_loss(x).loss);
      EXPECT_EQ(huber_loss(x, delta).gradient, l2_loss(x).gradient);
    }
  }
}

TEST(Loss, HuberIsEvenConvexAndSmooth) {
  const double delta = 0.7;
  for (double x = -4.0; x <= 4.0; x += 0.013) {
    EXPECT_DOUBLE_EQ(huber_loss(x, delta).loss, huber_loss(-x, delta).loss);
    const double mid = huber_loss(x, delta).loss;
    const double avg = 0.5 * (huber_loss(x - 0.1, delta).loss + huber_loss(x + 0.1, delta).loss);
    EXPECT_LE(mid, avg + 1e-15);
  }
  // Value and slope agree from both sides of the kink.
  const double eps = 1e-9;
  EXPECT_NEAR(huber_loss(delta - eps, delta).loss, huber_loss(delta + eps, delta).loss, 1e-8);
  EXPECT_NEAR(huber_loss(delta - eps, delta).gradient, huber_loss(delta + eps, delta).gradient, 1e-8);
}

TEST(Loss, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 200; ++i) {
    const double x = u(rng);
    for (LossKind kind : {LossKind::kHuber, LossKind::kL2}) {
      const double fd = oracle::central_difference([&](double v) { return evaluate_loss(kind, v, 1.3).loss; }, x);
      EXPECT_LT(relative_gap(evaluate_loss(kind, x, 1.3).gradient, fd), 1e-5);
    }
  }
}

TEST(Loss, NamesRoundTrip) {
  EXPECT_EQ(parse_loss_kind(to_string(LossKind::kHuber)), LossKind::kHuber);
  EXPECT_EQ(parse_loss_kind(to_string(LossKind::kL2)), LossKind::kL2);
  EXPECT_EQ(parse_parameterization(to_string(Parameterization::kLeftRight)), Parameterization::kLeftRight);
  EXPECT_EQ(parse_parameterization(to_string(Parameterization::kSlopeOffset)),
            Parameterization::kSlopeOffset);
  EXPECT_THROW(parse_loss_kind("l1"), Error);
}

TEST(Targets, RoundTripBothParameterizations) {
  const auto line = HorizonLine::from_left_right(0.2, -0.1, 1.5);
  for (auto p : {Parameterization::kSlopeOffset, Parameterization::kLeftRight}) {
    const auto back = line_from_targets(regression_targets(line, p, 1.5), p, 1.5).left_right(1.5);
    EXPECT_NEAR(back.left, 0.2, 1e-12);
    EXPECT_NEAR(back.right, -0.1, 1e-12);
  }
}

TEST(Features, ShapeAndGradientChannel) {
  const Image img = painted_square(64, 0.0);
  const Eigen::VectorXd f = extract_features(img);
  ASSERT_EQ(f.size(), kFeatureDim);
  // Top half white, bottom half black in the 16x16 grid.
  EXPECT_DOUBLE_EQ(f(0), 1.0);
  EXPECT_DOUBLE_EQ(f(15 * 16), 0.0);
  // Vertical gradient is nonzero only next to the boundary between rows 7 and 8.
  const int g = kFeatureGrid * kFeatureGrid;
  EXPECT_DOUBLE_EQ(f(g + 7 * 16 + 3), 0.5);
  EXPECT_DOUBLE_EQ(f(g + 8 * 16 + 3), 0.5);
  EXPECT_DOUBLE_EQ(f(g + 2 * 16 + 3), 0.0);
}

TEST(LinearObjective, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd x(25, 6), y(25, 2);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
  for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = n(rng);
  for (LossKind kind : {LossKind::kHuber, LossKind::kL2}) {
    const LinearObjective obj(x, y, kind, 0.8);
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::VectorXd w(static_cast<Eigen::Index>(obj.parameter_count()));
      for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = n(rng);
      const Eigen::VectorXd g = obj.gradient(w);
      double worst = 0.0;
      for (Eigen::Index i = 0; i < w.size(); ++i) {
        const double fd = oracle::central_difference(
            [&](double v) {
              Eigen::VectorXd p = w;
              p(i) = v;
              return obj.value(p);
            },
            w(i));
        worst = std::max(worst, relative_gap(g(i), fd));
      }
      EXPECT_LT(worst, 1e-5) << to_string(kind) << " trial " << trial;
    }
  }
}

TEST(LinearObjective, ValueIsMeanOfPerSampleLosses) {
  Eigen::MatrixXd x(2, 1), y(2, 2);
  x << 1.0, 2.0;
  y << 0.0, 1.0, 3.0, -1.0;
  const LinearObjective obj(x, y, LossKind::kL2);
  Eigen::VectorXd w(4);
  w << 1.0, 0.0, 0.0, 0.5;  // predictions x and 0.5
  const double want = (0.5 * 1 + 0.5 * 0.25 + 0.5 * 1 + 0.5 * 2.25) / 2.0;
  EXPECT_DOUBLE_EQ(obj.value(w), want);
}

TEST(TrainLinear, ConstantTargetsGiveZeroPredictions) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<TrainingExample> data;
  for (int i = 0; i < 50; ++i) {
    Image img(32, 32, 1);
    for (float& v : img.data()) v = u(rng);
    data.push_back({img, HorizonLine::from_left_right(0.0, 0.0, 1.0)});
  }
  TrainOptions opts;
  opts.epochs = 20;
  const TrainResult r = train_linear_baseline(data, opts);
  for (const auto& ex : data) {
    const auto t = r.spec.linear.predict(ex.image);
    EXPECT_NEAR(t[0], 0.0, 1e-3);
    EXPECT_NEAR(t[1], 0.0, 1e-3);
  }
}

TEST(TrainLinear, LearnsLinearlySolvableData) {
  const auto data = solvable_dataset(80, 11);
  TrainOptions opts;
  opts.loss = LossKind::kL2;
  opts.learning_rate = 1e-3;
  opts.epochs = 200;
  const TrainResult r = train_linear_baseline(data, opts);
  EXPECT_LT(r.epoch_losses.back(), 0.1 * r.constant_predictor_loss);
  for (std::size_t i = 0; i < 10; ++i) {
    const auto t = r.spec.linear.predict(data[i].image);
    const LeftRight lr = data[i].line.left_right(1.0);
    EXPECT_NEAR(t[0], lr.left, 0.05);
    EXPECT_NEAR(t[1], lr.right, 0.05);
  }
}

TEST(TrainLinear, FullBatchLossNeverIncreases) {
  const auto data = solvable_dataset(60, 12);
  for (LossKind kind : {LossKind::kHuber, LossKind::kL2}) {
    TrainOptions opts;
    opts.loss = kind;
    opts.delta = 0.1;
    opts.learning_rate = 1e-3;
    opts.epochs = 50;
    opts.batch_size = data.size();
    const TrainResult r = train_linear_baseline(data, opts);
    ASSERT_EQ(r.epoch_losses.size(), 51u);
    for (std::size_t i = 1; i < r.epoch_losses.size(); ++i) {
      EXPECT_LE(r.epoch_losses[i], r.epoch_losses[i - 1] + 1e-15);
    }
  }
}

TEST(TrainLinear, DeterministicForSeed) {
  const auto data = solvable_dataset(50, 4);
  TrainOptions opts;
  opts.epochs = 5;
  opts.seed = 99;
  const auto a = train_linear_baseline(data, opts);
  const auto b = train_linear_baseline(data, opts);
  EXPECT_EQ(predictor_to_json(a.spec), predictor_to_json(b.spec));
}

TEST(TrainLinear, NonSquareImagesUseCenterSquareLabels) {
  std::vector<TrainingExample> data;
  const auto base = solvable_dataset(50, 6);
  for (const auto& ex : base) {
    // Pad 16 columns each side: the center square is the original image.
    Image wide(96, 64, 1, 0.0f);
    for (int y = 0; y < 64; ++y) {
      for (int x = 0; x < 96; ++x) wide.at(x, y) = ex.image.at(std::clamp(x - 16, 0, 63), y);
    }
    const double rho = ex.line.left_right(1.0).left;
    data.push_back({wide, HorizonLine::from_left_right(rho, rho, 1.5)});
  }
  TrainOptions opts;
  opts.epochs = 3;
  opts.batch_size = 50;
  const auto wide_result = train_linear_baseline(data, opts);
  const auto square_result = train_linear_baseline(base, opts);
  for (Eigen::Index i = 0; i < wide_result.spec.linear.params.size(); ++i) {
    EXPECT_NEAR(wide_result.spec.linear.params(i), square_result.spec.linear.params(i), 1e-12);
  }
}

TEST(TrainLinear, NeedsFiftyImages) {
  const auto data = solvable_dataset(49, 1);
  try {
    train_linear_baseline(data, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientData);
  }
}

TEST(Predict, PriorIgnoresPixels) {
  const auto space = grid_space(5);
  std::vector<HorizonLine> labels;
  for (int i = 0; i < 40; ++i) labels.push_back(HorizonLine::from_left_right(0.01 * i - 0.2, 0.0, 1.0));
  const PredictorSpec prior = train_prior(labels, *space);
  EXPECT_NEAR(std::accumulate(prior.prior.begin(), prior.prior.end(), 0.0), 1.0, 1e-12);
  const Image a(32, 32, 1, 0.0f), b(32, 32, 1, 1.0f);
  const Window w{0, 0, 32, 32, false};
  const auto da = predict(prior, {"a", 0, &a, w}, space);
  const auto db = predict(prior, {"b", 3, &b, w}, space);
  EXPECT_EQ(da.probabilities(), db.probabilities());
}

TEST(Predict, UniformExternalGridDecodesFirstCell) {
  const auto space = grid_space(4);
  const std::vector<double> uniform(16, 1.0 / 16);
  PredictorSpec spec;
  spec.kind = PredictorSpec::Kind::kExternalGrid;
  spec.external = std::make_shared<ExternalGridStore>("space.json",
                                                      std::vector<ExternalGridRecord>{{"x", 0, 4, 4, uniform}});
  const auto d = predict(spec, {"x", 0, nullptr, {0, 0, 10, 10, false}}, space);
  EXPECT_EQ(d.argmax(), 0u);
  EXPECT_DOUBLE_EQ(d.point_estimate().theta(), space->theta.centers[0]);
  EXPECT_DOUBLE_EQ(d.point_estimate().rho(), space->rho.centers[0]);
}

TEST(Predict, MissingExternalGrid) {
  const auto space = grid_space(4);
  PredictorSpec spec;
  spec.kind = PredictorSpec::Kind::kExternalGrid;
  spec.external = std::make_shared<ExternalGridStore>(
      "", std::vector<ExternalGridRecord>{{"x", 0, 4, 4, std::vector<double>(16, 1.0 / 16)}});
  try {
    predict(spec, {"x", 1, nullptr, {0, 0, 10, 10, false}}, space);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingExternalGrid);
  }
  EXPECT_THROW(predict(spec, {"x", 0, nullptr, {0, 0, 10, 10, false}}, grid_space(3)), Error);
}

TEST(Predict, LinearIsOneHotAtItsPointEstimate) {
  const auto data = solvable_dataset(60, 21);
  TrainOptions opts;
  opts.loss = LossKind::kL2;
  opts.epochs = 100;
  const auto r = train_linear_baseline(data, opts);
  const auto space = grid_space(10);
  const Window w{0, 0, 64, 64, false};
  const auto d = predict(r.spec, {"img", 0, &data[0].image, w}, space);
  EXPECT_DOUBLE_EQ(d.max_probability(), 1.0);
  const auto t = r.spec.linear.predict(data[0].image);
  const LeftRight lr = d.point_estimate().left_right(1.0);
  EXPECT_NEAR(lr.left, t[0], 1e-12);
  EXPECT_NEAR(lr.right, t[1], 1e-12);
  EXPECT_EQ(d.argmax(), assign_bin(space->theta, d.point_estimate().theta()) * 10 +
                            assign_bin(space->rho, d.point_estimate().rho()));
  const Image wide(64, 32, 1);
  EXPECT_THROW(predict(r.spec, {"img", 0, &wide, w}, space), Error);
  // Pure: same input, same output.
  const auto again = predict(r.spec, {"img", 0, &data[0].image, w}, space);
  EXPECT_EQ(d.probabilities(), again.probabilities());
}

TEST(ExternalGrids, DuplicateRecordsRejected) {
  const std::vector<double> p(4, 0.25);
  EXPECT_THROW(ExternalGridStore("", {{"a", 0, 2, 2, p}, {"a", 0, 2, 2, p}}), Error);
  EXPECT_THROW(ExternalGridStore("", {{"a", 0, 2, 3, p}}), Error);
  EXPECT_NO_THROW(ExternalGridStore("", {{"a", 0, 2, 2, p}, {"a", 1, 2, 2, p}}));
}

TEST(ExternalGrids, JsonAndBinaryRoundTrip) {
  testing_support::TempDir dir;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ExternalGridRecord> records;
  for (int i = 0; i < 4; ++i) {
    std::vector<double> p(6);
    for (auto& v : p) v = u(rng);
    records.push_back({"img" + std::to_string(i), i % 2, 2, 3, p});
  }
  const ExternalGridStore store("space.json", records);
  write_external_grids_json(dir.file("g.json"), store);
  write_external_grids_binary(dir.file("g.bin"), store);
  for (const char* name : {"g.json", "g.bin"}) {
    const auto back = read_external_grids(dir.file(name));
    EXPECT_EQ(back.label_space_ref(), "space.json");
    ASSERT_EQ(back.records().size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_EQ(back.records()[i].image_id, records[i].image_id);
      EXPECT_EQ(back.records()[i].crop_index, records[i].crop_index);
      EXPECT_EQ(back.records()[i].probabilities, records[i].probabilities) << name;
    }
  }
  std::ofstream(dir.file("bad.bin")) << "NOTAGRID";
  EXPECT_THROW(read_external_grids(dir.file("bad.bin")), Error);
}

TEST(PredictorJson, RoundTripsEveryKind) {
  testing_support::TempDir dir;
  const auto data = solvable_dataset(50, 2);
  TrainOptions opts;
  opts.epochs = 2;
  const auto linear = train_linear_baseline(data, opts).spec;
  write_predictor(dir.file("linear.json"), linear);
  const auto back = read_predictor(dir.file("linear.json"));
  EXPECT_EQ(back.kind, PredictorSpec::Kind::kLinear);
  EXPECT_EQ(back.linear.params, linear.linear.params);
  EXPECT_EQ(back.metadata.at("loss"), "huber");
  EXPECT_EQ(predictor_to_json(back), predictor_to_json(linear));

  PredictorSpec prior;
  prior.prior = {0.25, 0.75};
  EXPECT_EQ(predictor_from_json(predictor_to_json(prior)).prior, prior.prior);

  write_external_grids_binary(dir.file("grids.bin"),
                              ExternalGridStore("", {{"q", 0, 1, 2, {0.5, 0.5}}}));
  PredictorSpec ext;
  ext.kind = PredictorSpec::Kind::kExternalGrid;
  ext.external_grid_file = "grids.bin";
  ext.metadata["training"] = "fine-tuned from a classification network";
  write_predictor(dir.file("ext.json"), ext);
  const auto ext_back = read_predictor(dir.file("ext.json"));
  ASSERT_TRUE(ext_back.external);
  EXPECT_EQ(ext_back.external->find("q", 0).probabilities.size(), 2u);
  EXPECT_EQ(ext_back.metadata.at("training"), ext.metadata.at("training"));

  EXPECT_THROW(predictor_from_json("{\"kind\": \"cnn\"}"), Error);
}
