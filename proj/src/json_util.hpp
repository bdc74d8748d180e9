#pragma once

// Strict JSON navigation with pointer-path error messages, shared by the
// scenario/plan loaders and the CLI.

#include <Eigen/Dense>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace prstl::jsonu {

using Json = nlohmann::ordered_json;

[[noreturn]] inline void fail(const std::string& ptr, const std::string& what) {
  throw std::invalid_argument((ptr.empty() ? "/" : ptr) + ": " + what);
}

inline const Json& field(const Json& j, const std::string& ptr,
                         const char* key) {
  if (!j.is_object()) fail(ptr, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) fail(ptr + "/" + key, "missing");
  return *it;
}

inline const Json* opt_field(const Json& j, const char* key) {
  if (!j.is_object()) return nullptr;
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

inline void reject_unknown(const Json& j, const std::string& ptr,
                           const std::set<std::string>& allowed) {
  if (!j.is_object()) fail(ptr, "expected an object");
  for (const auto& item : j.items())
    if (!allowed.count(item.key())) fail(ptr + "/" + item.key(), "unknown key");
}

inline int get_int(const Json& j, const std::string& ptr) {
  if (!j.is_number_integer()) fail(ptr, "expected an integer");
  return j.get<int>();
}

inline std::uint64_t get_u64(const Json& j, const std::string& ptr) {
  if (!(j.is_number_unsigned() ||
        (j.is_number_integer() && j.get<std::int64_t>() >= 0)))
    fail(ptr, "expected a nonnegative integer");
  return j.get<std::uint64_t>();
}

inline double get_num(const Json& j, const std::string& ptr) {
  if (!j.is_number()) fail(ptr, "expected a number");
  return j.get<double>();
}

inline std::string get_str(const Json& j, const std::string& ptr) {
  if (!j.is_string()) fail(ptr, "expected a string");
  return j.get<std::string>();
}

inline Eigen::VectorXd get_vector(const Json& j, const std::string& ptr) {
  if (!j.is_array() || j.empty()) fail(ptr, "expected a nonempty array");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    v[static_cast<Eigen::Index>(i)] =
        get_num(j[i], ptr + "/" + std::to_string(i));
  return v;
}

inline Eigen::MatrixXd get_matrix(const Json& j, const std::string& ptr) {
  if (!j.is_array() || j.empty()) fail(ptr, "expected a nonempty array of rows");
  Eigen::MatrixXd m;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Eigen::VectorXd row = get_vector(j[i], ptr + "/" + std::to_string(i));
    if (i == 0)
      m.resize(static_cast<Eigen::Index>(j.size()), row.size());
    else if (row.size() != m.cols())
      fail(ptr + "/" + std::to_string(i), "ragged row");
    m.row(static_cast<Eigen::Index>(i)) = row;
  }
  return m;
}

inline Eigen::MatrixXd get_matrix(const Json& j, const std::string& ptr,
                                  int rows, int cols) {
  Eigen::MatrixXd m = get_matrix(j, ptr);
  if (m.rows() != rows || m.cols() != cols)
    fail(ptr, "expected " + std::to_string(rows) + "x" + std::to_string(cols) +
                  ", got " + std::to_string(m.rows()) + "x" +
                  std::to_string(m.cols()));
  return m;
}

inline Json dump_vector(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Json dump_matrix(const Eigen::MatrixXd& m) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    a.push_back(dump_vector(m.row(i).transpose()));
  return a;
}

} // namespace prstl::jsonu
