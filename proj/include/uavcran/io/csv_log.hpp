#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "uavcran/orchestrator.hpp"

namespace uavcran::io {

inline constexpr const char* kCsvHeader = "t,uav_id,x,y,vx,vy,grad_x,grad_y,r_min,s_min";

// 9 significant digits, C locale.
inline std::string format_float(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline std::string to_csv(const SimLog& log) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& row : log.rows) {
    const std::string t = format_float(row.t);
    const std::string r = format_float(row.r_min);
    const std::string s = format_subset(row.s_min);
    for (int k = 0; k < log.n_uavs; ++k) {
      out += t;
      out += ',' + std::to_string(k + 1);
      out += ',' + format_float(row.position[k].x());
      out += ',' + format_float(row.position[k].y());
      out += ',' + format_float(row.velocity[k].x());
      out += ',' + format_float(row.velocity[k].y());
      out += ',' + format_float(row.gradient[k].x());
      out += ',' + format_float(row.gradient[k].y());
      out += ',' + r;
      out += ',' + s;
      out += '\n';
    }
  }
  return out;
}

struct CsvRow {
  double t = 0.0;
  int uav_id = 0;
  double x = 0.0, y = 0.0, vx = 0.0, vy = 0.0, grad_x = 0.0, grad_y = 0.0, r_min = 0.0;
  std::string s_min;
};

inline std::vector<CsvRow> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw ValidationError("csv: unexpected header");
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 10) throw ValidationError("csv: expected 10 fields, got " + std::to_string(f.size()));
    CsvRow r;
    try {
      r.t = std::stod(f[0]);
      r.uav_id = std::stoi(f[1]);
      r.x = std::stod(f[2]);
      r.y = std::stod(f[3]);
      r.vx = std::stod(f[4]);
      r.vy = std::stod(f[5]);
      r.grad_x = std::stod(f[6]);
      r.grad_y = std::stod(f[7]);
      r.r_min = std::stod(f[8]);
    } catch (const std::exception&) {
      throw ValidationError("csv: malformed number in line '" + line + "'");
    }
    r.s_min = f[9];
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << content;
}

}  // namespace uavcran::io
