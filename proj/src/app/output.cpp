#include "bohm/app/output.hpp"

#include <cstdio>
#include <fstream>
#include <system_error>

#include <unistd.h>

#include <fmt/format.h>

#include "bohm/errors.hpp"

namespace bohm::app {

std::string format_number(double x) { return fmt::format("{:.17g}", x); }

Csv::Csv(const std::vector<std::string>& header) {
  for (const auto& h : header) str(h);
  end_row();
}

void Csv::sep() {
  if (!fresh_) text_ += ',';
  fresh_ = false;
}

Csv& Csv::num(double x) {
  sep();
  text_ += format_number(x);
  return *this;
}

Csv& Csv::integer(long long x) {
  sep();
  text_ += fmt::format("{}", x);
  return *this;
}

Csv& Csv::str(std::string_view s) {
  sep();
  text_ += s;
  return *this;
}

void Csv::end_row() {
  text_ += '\n';
  fresh_ = true;
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw Error("cannot create directory " + path.parent_path().string() + ": " + ec.message());

  fs::path tmp = path;
  tmp += fmt::format(".tmp{}", static_cast<long>(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp, ec);
      throw Error("cannot write " + tmp.string());
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw Error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

}  // namespace bohm::app
