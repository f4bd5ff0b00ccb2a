#pragma once

// Line-based experiment config: `[section]` headers, `key = value` pairs,
// `#` comments, arrays as comma-separated values. Every key a reader does not
// consume is rejected.

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "occlab/functionals.hpp"
#include "occlab/models.hpp"

namespace occlab {

struct ConfigDoc {
    std::map<std::string, std::map<std::string, std::string>> sections;
};

/// Throws ConfigError naming the line on malformed input or duplicate keys.
ConfigDoc parse_config(std::string_view text);
ConfigDoc load_config(const std::string& path);
/// Applies `section.key=value`.
void apply_override(ConfigDoc& doc, const std::string& assignment);

/// Typed access to one section. Values are validated on read; `finish()`
/// rejects keys that were never read. `resolved()` lists every key read with
/// its effective value, defaults included.
class SectionReader {
  public:
    SectionReader(const ConfigDoc& doc, std::string section);

    double real(const std::string& key, double def);
    double real_required(const std::string& key);
    std::int64_t integer(const std::string& key, std::int64_t def);
    std::uint64_t u64(const std::string& key, std::uint64_t def);
    std::size_t count(const std::string& key, std::size_t def);
    bool flag(const std::string& key, bool def);
    std::string text(const std::string& key, const std::string& def);
    std::vector<double> reals(const std::string& key, const std::vector<double>& def);
    std::vector<std::size_t> counts(const std::string& key, const std::vector<std::size_t>& def);
    bool has(const std::string& key) const;

    void finish() const;
    const std::string& name() const { return section_; }
    const std::vector<std::pair<std::string, std::string>>& resolved() const { return resolved_; }

  private:
    const std::string* raw(const std::string& key);
    void record(const std::string& key, std::string value);

    std::string section_;
    std::map<std::string, std::string> values_;
    std::map<std::string, bool> used_;
    std::vector<std::pair<std::string, std::string>> resolved_;
};

/// model = bm | stable | stable_drift | sde, with the parameters of each.
ProcessModel read_model(SectionReader& r);
/// below:LEVEL | interval:LO:HI | scaled:RHO:LEVEL | const:V
FunctionalSpec parse_functional(const std::string& spec);

/// Shortest round-trip decimal form.
std::string format_double(double v);
std::string join_doubles(const std::vector<double>& v);

}  // namespace occlab
