#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "horizon/error.hpp"
#include "horizon/image.hpp"
#include "horizon/label_io.hpp"
#include "temp_dir.hpp"

using namespace horizon;

TEST(FormatDouble, RoundTripsBitExactly) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, i % 7 - 3);
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.25), "0.25");
  EXPECT_EQ(format_double(0.0), "0");
  EXPECT_EQ(format_double(240.0), "240");
}

TEST(LabelRecord, PixelRowsMatchCenteredLine) {
  const ImageFrame frame{640, 480};
  // Horizon through pixel rows 200 (left edge) and 300 (right edge).
  const LabelRecord r{"a", frame, 200.0, 300.0, {}};
  const LeftRight lr = r.line().left_right(frame.aspect());
  EXPECT_NEAR(lr.left, (240.0 - 200.0) / 480.0, 1e-15);
  EXPECT_NEAR(lr.right, (240.0 - 300.0) / 480.0, 1e-15);
  const LabelRecord back = LabelRecord::from_line("a", frame, r.line());
  EXPECT_NEAR(back.y_left, 200.0, 1e-12);
  EXPECT_NEAR(back.y_right, 300.0, 1e-12);
}

TEST(LabelsCsv, RoundTripWithExtraColumns) {
  std::vector<LabelRecord> recs;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-100.0, 600.0);
  for (int i = 0; i < 20; ++i) {
    LabelRecord r{"img" + std::to_string(i), {640, 480}, u(rng), u(rng), {}};
    r.extra["roll_deg"] = std::to_string(i);
    if (i % 2) r.extra["path"] = "x/" + r.image_id + ".png";
    recs.push_back(r);
  }
  std::stringstream ss;
  write_labels_csv(ss, recs, {"path", "roll_deg"});
  const auto back = read_labels_csv(ss);
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(back[i].image_id, recs[i].image_id);
    EXPECT_EQ(back[i].frame.width, 640);
    EXPECT_EQ(back[i].y_left, recs[i].y_left);
    EXPECT_EQ(back[i].y_right, recs[i].y_right);
    EXPECT_EQ(back[i].extra.at("roll_deg"), std::to_string(i));
    EXPECT_EQ(back[i].extra.at("path"), i % 2 ? recs[i].extra.at("path") : "");
  }
  // Writing what was read reproduces the bytes.
  std::stringstream again;
  write_labels_csv(again, back, {"path", "roll_deg"});
  EXPECT_EQ(again.str(), ss.str());
}

TEST(LabelsCsv, ColumnsLocatedByName) {
  std::istringstream in(
      "note,y_right,image_id,height,y_left,width\n"
      "hello,12.5,abc,100,10,200\r\n"
      "\n"
      "bye,3,def,50,4,60\n");
  const auto recs = read_labels_csv(in);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].image_id, "abc");
  EXPECT_EQ(recs[0].frame.width, 200);
  EXPECT_EQ(recs[0].frame.height, 100);
  EXPECT_EQ(recs[0].y_left, 10.0);
  EXPECT_EQ(recs[0].y_right, 12.5);
  EXPECT_EQ(recs[0].extra.at("note"), "hello");
  EXPECT_EQ(recs[1].frame.width, 60);
}

TEST(LabelsCsv, ErrorsNameTheProblem) {
  auto code_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      read_labels_csv(in);
    } catch (const Error& e) {
      return std::make_pair(e.code(), std::string(e.what()));
    }
    return std::make_pair(ErrorCode::kInvalidArgument, std::string("no error"));
  };
  auto [c1, m1] = code_of("image_id,width,height,y_left\na,1,1,0\n");
  EXPECT_EQ(c1, ErrorCode::kFormat);
  EXPECT_NE(m1.find("y_right"), std::string::npos);
  auto [c2, m2] = code_of("image_id,width,height,y_left,y_right\na,10,10,0,zz\n");
  EXPECT_EQ(c2, ErrorCode::kFormat);
  EXPECT_NE(m2.find("line 2"), std::string::npos);
  auto [c3, m3] = code_of("image_id,width,height,y_left,y_right\na,10,10,0\n");
  EXPECT_EQ(c3, ErrorCode::kFormat);
  auto [c4, m4] = code_of("image_id,width,height,y_left,y_right\na,0,10,0,0\n");
  EXPECT_EQ(c4, ErrorCode::kFormat);
  EXPECT_THROW(read_labels_csv(std::string("/nonexistent/labels.csv")), Error);
}

TEST(ImageIo, PngRoundTripIsEightBitExact) {
  testing_support::TempDir dir;
  Image img(17, 9, 3);
  for (int y = 0; y < 9; ++y) {
    for (int x = 0; x < 17; ++x) {
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<float>((x * 13 + y * 7 + c * 50) % 256) / 255.0f;
    }
  }
  write_image(dir.file("a.png"), img);
  const Image back = read_image(dir.file("a.png"));
  ASSERT_EQ(back.width(), 17);
  ASSERT_EQ(back.height(), 9);
  for (std::size_t i = 0; i < img.data().size(); ++i) EXPECT_FLOAT_EQ(back.data()[i], img.data()[i]);

  Image gray(8, 8, 1, 0.5f);
  write_image(dir.file("g.png"), gray);
  const Image g = read_image(dir.file("g.png"));
  EXPECT_EQ(g.channels(), 3);
  EXPECT_NEAR(g.at(3, 3, 1), 128.0f / 255.0f, 1e-6f);
  EXPECT_THROW(read_image(dir.file("missing.png")), Error);
}

TEST(ImageOps, ResizeAreaAveragesBlocks) {
  Image img(4, 4, 1);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) img.at(x, y) = static_cast<float>(4 * y + x);
  }
  const Image half = resize_area(img, 2, 2);
  EXPECT_FLOAT_EQ(half.at(0, 0), (0 + 1 + 4 + 5) / 4.0f);
  EXPECT_FLOAT_EQ(half.at(1, 1), (10 + 11 + 14 + 15) / 4.0f);
  const Image third = resize_area(Image(3, 3, 1, 2.0f), 2, 2);
  for (float v : third.data()) EXPECT_FLOAT_EQ(v, 2.0f);
}

TEST(ImageOps, CenterSquareAndAlignedCrop) {
  const Window w = center_square({300, 200});
  EXPECT_EQ(w.x0, 50.0);
  EXPECT_EQ(w.y0, 0.0);
  EXPECT_EQ(w.width, 200.0);
  const Image img(300, 200, 1);
  EXPECT_THROW(crop(img, Window{0.5, 0.0, 10.0, 10.0, false}), Error);
  EXPECT_THROW(crop(img, 295, 0, 10, 10), Error);
  EXPECT_EQ(crop(img, w).width(), 200);
}
