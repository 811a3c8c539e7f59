#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace bohm::app {

// Round-trip decimal, 17 significant digits.
std::string format_number(double x);

// Builds a CSV in memory; nothing touches the disk until write_atomic.
class Csv {
 public:
  explicit Csv(const std::vector<std::string>& header);
  Csv& num(double x);
  Csv& integer(long long x);
  Csv& str(std::string_view s);
  void end_row();
  const std::string& text() const { return text_; }

 private:
  void sep();
  std::string text_;
  bool fresh_ = true;
};

// Writes to a temporary file next to the target and renames it into place,
// so the final path never holds a partial file. Creates parent directories.
void write_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace bohm::app
