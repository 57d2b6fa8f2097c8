#pragma once

// Horizon label interchange CSV.
//
//   image_id,width,height,y_left,y_right[,extra columns...]
//
// y_left / y_right are the horizon's pixel rows (origin top-left, y down) at
// x = 0 and x = width. Readers locate columns by header name and ignore any
// extra columns; writers emit doubles with 17 significant digits so output
// is bit-exactly reproducible.

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "horizon/geometry.hpp"

namespace horizon {

struct LabelRecord {
  std::string image_id;
  ImageFrame frame;
  double y_left = 0.0;
  double y_right = 0.0;
  std::map<std::string, std::string> extra;

  HorizonLine line() const;
  static LabelRecord from_line(std::string image_id, const ImageFrame& frame,
                               const HorizonLine& line);
};

/// printf %.17g equivalent; parses back to the identical double.
std::string format_double(double value);

std::vector<LabelRecord> read_labels_csv(std::istream& in);
std::vector<LabelRecord> read_labels_csv(const std::string& path);

/// `extra_columns` are written after the fixed columns, in the given order,
/// from each record's `extra` map (empty when absent).
void write_labels_csv(std::ostream& out, const std::vector<LabelRecord>& records,
                      const std::vector<std::string>& extra_columns = {});
void write_labels_csv(const std::string& path, const std::vector<LabelRecord>& records,
                      const std::vector<std::string>& extra_columns = {});

}  // namespace horizon
