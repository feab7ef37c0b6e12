// Plain-text numeric I/O shared by the dataset, init, trace and parameter files.
#pragma once

#include "relu_lab/common.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace relu_lab::text {

// 17 significant digits round-trips every double.
inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string join(const Vec& v, char sep = ' ') {
  std::string out;
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (k) out += sep;
    out += fmt(v[k]);
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::io, "cannot write " + path);
  out << body;
  require(static_cast<bool>(out), ErrorKind::io, "write failed for " + path);
}

// Whitespace tokenizer with typed extraction and positional error messages.
class Tokens {
 public:
  explicit Tokens(const std::string& body, std::string origin = "input")
      : in_(body), origin_(std::move(origin)) {}

  std::string word() {
    std::string w;
    require(static_cast<bool>(in_ >> w), ErrorKind::io, origin_ + ": unexpected end of data");
    return w;
  }

  double number() {
    const std::string w = word();
    try {
      std::size_t used = 0;
      const double v = std::stod(w, &used);
      require(used == w.size(), ErrorKind::io, origin_ + ": malformed number '" + w + "'");
      return v;
    } catch (const std::logic_error&) {
      throw LabError(ErrorKind::io, origin_ + ": malformed number '" + w + "'");
    }
  }

  long long integer() {
    const double v = number();
    require(std::floor(v) == v, ErrorKind::io, origin_ + ": expected an integer");
    return static_cast<long long>(v);
  }

  unsigned long long unsigned_integer() {
    const std::string w = word();
    try {
      std::size_t used = 0;
      const auto v = std::stoull(w, &used);
      require(used == w.size(), ErrorKind::io, origin_ + ": malformed integer '" + w + "'");
      return v;
    } catch (const std::logic_error&) {
      throw LabError(ErrorKind::io, origin_ + ": malformed integer '" + w + "'");
    }
  }

  Vec vector(int size) {
    Vec v(size);
    for (int k = 0; k < size; ++k) v[k] = number();
    return v;
  }

  bool exhausted() {
    std::string w;
    return !(in_ >> w);
  }

 private:
  std::istringstream in_;
  std::string origin_;
};

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace relu_lab::text
