// Copyright 2026 The narjoint Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nar/key_values.h"

#include <cstdio>
#include <sstream>

#include "nar/errors.h"

namespace nar {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parseNumber(const std::string& v) {
  size_t used = 0;
  T out{};
  if constexpr (std::is_same_v<T, double>) {
    out = std::stod(v, &used);
  } else if constexpr (std::is_same_v<T, std::uint64_t>) {
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    out = std::stoull(v, &used);
  } else {
    const long long x = std::stoll(v, &used);
    out = static_cast<T>(x);
    if (static_cast<long long>(out) != x) throw std::out_of_range("range");
  }
  if (used != v.size()) throw std::invalid_argument("trailing characters");
  return out;
}

}  // namespace

std::string formatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::map<std::string, std::string> parseKeyValues(const std::string& text,
                                                  const std::string& what) {
  std::map<std::string, std::string> out;
  std::istringstream is(text);
  std::string line;
  int lineNo = 0;
  while (std::getline(is, line)) {
    ++lineNo;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError(what + " line " + std::to_string(lineNo) + ": expected key=value");
    }
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

template <typename T>
void KeyValueBinder::add(const std::string& key, T& field,
                         std::function<T(const std::string&)> parse,
                         std::function<std::string(const T&)> format) {
  order_.push_back(key);
  T* ptr = &field;
  setters_[key] = [this, key, ptr, parse](const std::string& v) {
    try {
      *ptr = parse(v);
    } catch (const std::exception&) {
      throw DataError(what_ + ": bad value '" + v + "' for " + key);
    }
  };
  getters_[key] = [ptr, format] { return format(*ptr); };
}

void KeyValueBinder::bind(const std::string& key, int& field) {
  add<int>(key, field, parseNumber<int>, [](const int& v) { return std::to_string(v); });
}
void KeyValueBinder::bind(const std::string& key, std::int64_t& field) {
  add<std::int64_t>(key, field, parseNumber<std::int64_t>,
                    [](const std::int64_t& v) { return std::to_string(v); });
}
void KeyValueBinder::bind(const std::string& key, std::uint64_t& field) {
  add<std::uint64_t>(key, field, parseNumber<std::uint64_t>,
                     [](const std::uint64_t& v) { return std::to_string(v); });
}
void KeyValueBinder::bind(const std::string& key, double& field) {
  add<double>(key, field, parseNumber<double>, [](const double& v) { return formatDouble(v); });
}
void KeyValueBinder::bind(const std::string& key, bool& field) {
  add<bool>(
      key, field,
      [](const std::string& v) {
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        throw std::invalid_argument("bool");
      },
      [](const bool& v) { return std::string(v ? "true" : "false"); });
}
void KeyValueBinder::bind(const std::string& key, std::string& field) {
  add<std::string>(key, field, [](const std::string& v) { return v; },
                   [](const std::string& v) { return v; });
}

void KeyValueBinder::bind(const std::string& key, std::function<void(const std::string&)> set,
                          std::function<std::string()> get) {
  order_.push_back(key);
  setters_[key] = [this, key, set](const std::string& v) {
    try {
      set(v);
    } catch (const std::exception&) {
      throw DataError(what_ + ": bad value '" + v + "' for " + key);
    }
  };
  getters_[key] = std::move(get);
}

void KeyValueBinder::set(const std::string& key, const std::string& value) const {
  const auto it = setters_.find(key);
  if (it == setters_.end()) throw DataError(what_ + ": unknown key '" + key + "'");
  it->second(value);
}

void KeyValueBinder::apply(const std::map<std::string, std::string>& values) const {
  for (const auto& [k, v] : values) set(k, v);
}

std::string KeyValueBinder::get(const std::string& key) const {
  const auto it = getters_.find(key);
  if (it == getters_.end()) throw DataError(what_ + ": unknown key '" + key + "'");
  return it->second();
}

std::string KeyValueBinder::serialize() const {
  std::string out;
  for (const auto& k : order_) out += k + "=" + getters_.at(k)() + "\n";
  return out;
}

}  // namespace nar
