#include "horizon/label_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "horizon/error.hpp"

namespace horizon {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, int line_no, const char* column) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kFormat, "line " + std::to_string(line_no) + ": bad " + column +
                                        " value '" + s + "'");
  }
}

}  // namespace

HorizonLine LabelRecord::line() const {
  const double h = frame.height;
  const double left = (0.5 * h - y_left) / h;
  const double right = (0.5 * h - y_right) / h;
  return HorizonLine::from_left_right(left, right, frame.aspect());
}

LabelRecord LabelRecord::from_line(std::string image_id, const ImageFrame& frame,
                                   const HorizonLine& line) {
  const LeftRight lr = line.left_right(frame.aspect());
  const double h = frame.height;
  return {std::move(image_id), frame, 0.5 * h - lr.left * h, 0.5 * h - lr.right * h, {}};
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::vector<LabelRecord> read_labels_csv(std::istream& in) {
  std::string line;
  int line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string::npos) break;
  }
  header = split_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* required : {"image_id", "width", "height", "y_left", "y_right"}) {
    if (!col.count(required)) {
      throw Error(ErrorCode::kFormat, std::string("missing column '") + required + "'");
    }
  }
  std::vector<LabelRecord> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::kFormat, "line " + std::to_string(line_no) + ": expected " +
                                          std::to_string(header.size()) + " fields, got " +
                                          std::to_string(fields.size()));
    }
    LabelRecord rec;
    rec.image_id = fields[col["image_id"]];
    rec.frame.width = static_cast<int>(parse_double(fields[col["width"]], line_no, "width"));
    rec.frame.height = static_cast<int>(parse_double(fields[col["height"]], line_no, "height"));
    if (rec.frame.width <= 0 || rec.frame.height <= 0) {
      throw Error(ErrorCode::kFormat, "line " + std::to_string(line_no) + ": non-positive image size");
    }
    rec.y_left = parse_double(fields[col["y_left"]], line_no, "y_left");
    rec.y_right = parse_double(fields[col["y_right"]], line_no, "y_right");
    for (std::size_t i = 0; i < header.size(); ++i) {
      const auto& name = header[i];
      if (name != "image_id" && name != "width" && name != "height" && name != "y_left" &&
          name != "y_right") {
        rec.extra[name] = fields[i];
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<LabelRecord> read_labels_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFormat, "cannot open '" + path + "'");
  return read_labels_csv(in);
}

void write_labels_csv(std::ostream& out, const std::vector<LabelRecord>& records,
                      const std::vector<std::string>& extra_columns) {
  out << "image_id,width,height,y_left,y_right";
  for (const auto& c : extra_columns) out << ',' << c;
  out << '\n';
  for (const auto& r : records) {
    out << r.image_id << ',' << r.frame.width << ',' << r.frame.height << ','
        << format_double(r.y_left) << ',' << format_double(r.y_right);
    for (const auto& c : extra_columns) {
      auto it = r.extra.find(c);
      out << ',' << (it == r.extra.end() ? std::string() : it->second);
    }
    out << '\n';
  }
}

void write_labels_csv(const std::string& path, const std::vector<LabelRecord>& records,
                      const std::vector<std::string>& extra_columns) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kFormat, "cannot write '" + path + "'");
  write_labels_csv(out, records, extra_columns);
}

}  // namespace horizon
