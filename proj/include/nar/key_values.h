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

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace nar {

// Parses "key=value" lines. Blank lines and lines starting with '#' are
// skipped. Throws DataError with the line number on malformed input.
std::map<std::string, std::string> parseKeyValues(const std::string& text,
                                                  const std::string& what);

// Two-way binding between config struct fields and key=value text.
class KeyValueBinder {
 public:
  explicit KeyValueBinder(std::string what) : what_(std::move(what)) {}

  void bind(const std::string& key, int& field);
  void bind(const std::string& key, std::int64_t& field);
  void bind(const std::string& key, std::uint64_t& field);
  void bind(const std::string& key, double& field);
  void bind(const std::string& key, bool& field);
  void bind(const std::string& key, std::string& field);
  // Custom conversion; `set` throws on a bad value.
  void bind(const std::string& key, std::function<void(const std::string&)> set,
            std::function<std::string()> get);

  // Unknown keys and unparsable values throw DataError.
  void apply(const std::map<std::string, std::string>& values) const;
  void set(const std::string& key, const std::string& value) const;
  bool has(const std::string& key) const { return setters_.count(key) > 0; }
  const std::vector<std::string>& keys() const { return order_; }
  std::string get(const std::string& key) const;
  // One line per key in binding order.
  std::string serialize() const;

 private:
  template <typename T>
  void add(const std::string& key, T& field,
           std::function<T(const std::string&)> parse,
           std::function<std::string(const T&)> format);

  std::string what_;
  std::vector<std::string> order_;
  std::map<std::string, std::function<void(const std::string&)>> setters_;
  std::map<std::string, std::function<std::string()>> getters_;
};

std::string formatDouble(double v);

}  // namespace nar
