#include "occlab/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "occlab/error.hpp"

namespace occlab {

namespace {

std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

bool parse_real(const std::string& s, double& v) {
    if (s == "inf" || s == "+inf") return v = std::numeric_limits<double>::infinity(), true;
    if (s == "-inf") return v = -std::numeric_limits<double>::infinity(), true;
    const char* b = s.data();
    const char* e = b + s.size();
    if (b != e && *b == '+') ++b;
    const auto res = std::from_chars(b, e, v);
    return res.ec == std::errc() && res.ptr == e && !std::isnan(v);
}

bool parse_int(const std::string& s, std::int64_t& v) {
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace

ConfigDoc parse_config(std::string_view text) {
    ConfigDoc doc;
    std::string section;
    std::size_t line_no = 0;
    std::istringstream is{std::string(text)};
    std::string line;
    while (std::getline(is, line)) {
        ++line_no;
        const auto hash = line.find('#');
        const std::string s = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (s.empty()) continue;
        const std::string where = "config line " + std::to_string(line_no) + ": ";
        if (s.front() == '[') {
            if (s.back() != ']' || s.size() < 3) throw ConfigError(where + "malformed section header");
            section = trim(s.substr(1, s.size() - 2));
            doc.sections[section];
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
        if (section.empty()) throw ConfigError(where + "key outside of any [section]");
        const std::string key = trim(s.substr(0, eq));
        if (key.empty()) throw ConfigError(where + "empty key");
        auto& sec = doc.sections[section];
        if (sec.count(key)) throw ConfigError(where + "duplicate key " + section + "." + key);
        sec[key] = trim(s.substr(eq + 1));
    }
    return doc;
}

ConfigDoc load_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot read config file " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

void apply_override(ConfigDoc& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    const auto dot = assignment.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
        throw ConfigError("override must look like section.key=value: " + assignment);
    const std::string sec = trim(assignment.substr(0, dot));
    const std::string key = trim(assignment.substr(dot + 1, eq - dot - 1));
    if (sec.empty() || key.empty()) throw ConfigError("override must look like section.key=value: " + assignment);
    doc.sections[sec][key] = trim(assignment.substr(eq + 1));
}

SectionReader::SectionReader(const ConfigDoc& doc, std::string section) : section_(std::move(section)) {
    const auto it = doc.sections.find(section_);
    if (it != doc.sections.end()) values_ = it->second;
    for (const auto& kv : values_) used_[kv.first] = false;
}

const std::string* SectionReader::raw(const std::string& key) {
    const auto it = values_.find(key);
    if (it == values_.end()) return nullptr;
    used_[key] = true;
    return &it->second;
}

void SectionReader::record(const std::string& key, std::string value) {
    resolved_.emplace_back(key, std::move(value));
}

bool SectionReader::has(const std::string& key) const { return values_.count(key) != 0; }

double SectionReader::real(const std::string& key, double def) {
    double v = def;
    if (const auto* s = raw(key)) {
        if (!parse_real(*s, v)) throw ConfigError(section_ + "." + key + ": not a number: '" + *s + "'");
    }
    record(key, format_double(v));
    return v;
}

double SectionReader::real_required(const std::string& key) {
    if (!has(key)) throw ConfigError(section_ + "." + key + ": required key missing");
    return real(key, 0.0);
}

std::int64_t SectionReader::integer(const std::string& key, std::int64_t def) {
    std::int64_t v = def;
    if (const auto* s = raw(key)) {
        if (!parse_int(*s, v)) throw ConfigError(section_ + "." + key + ": not an integer: '" + *s + "'");
    }
    record(key, std::to_string(v));
    return v;
}

std::uint64_t SectionReader::u64(const std::string& key, std::uint64_t def) {
    std::uint64_t v = def;
    if (const auto* s = raw(key)) {
        const auto res = std::from_chars(s->data(), s->data() + s->size(), v);
        if (res.ec != std::errc() || res.ptr != s->data() + s->size())
            throw ConfigError(section_ + "." + key + ": not an unsigned integer: '" + *s + "'");
    }
    record(key, std::to_string(v));
    return v;
}

std::size_t SectionReader::count(const std::string& key, std::size_t def) {
    const std::int64_t v = integer(key, static_cast<std::int64_t>(def));
    if (v < 0) throw ConfigError(section_ + "." + key + ": must be nonnegative");
    return static_cast<std::size_t>(v);
}

bool SectionReader::flag(const std::string& key, bool def) {
    bool v = def;
    if (const auto* s = raw(key)) {
        if (*s == "true" || *s == "1" || *s == "yes")
            v = true;
        else if (*s == "false" || *s == "0" || *s == "no")
            v = false;
        else
            throw ConfigError(section_ + "." + key + ": expected true or false");
    }
    record(key, v ? "true" : "false");
    return v;
}

std::string SectionReader::text(const std::string& key, const std::string& def) {
    std::string v = def;
    if (const auto* s = raw(key)) v = *s;
    record(key, v);
    return v;
}

std::vector<double> SectionReader::reals(const std::string& key, const std::vector<double>& def) {
    std::vector<double> v = def;
    if (const auto* s = raw(key)) {
        v.clear();
        for (const auto& part : split(*s, ',')) {
            double x;
            if (!parse_real(part, x)) throw ConfigError(section_ + "." + key + ": not a number list: '" + *s + "'");
            v.push_back(x);
        }
    }
    record(key, join_doubles(v));
    return v;
}

std::vector<std::size_t> SectionReader::counts(const std::string& key, const std::vector<std::size_t>& def) {
    std::vector<std::size_t> v = def;
    if (const auto* s = raw(key)) {
        v.clear();
        for (const auto& part : split(*s, ',')) {
            std::int64_t x;
            if (!parse_int(part, x) || x < 0)
                throw ConfigError(section_ + "." + key + ": not a list of counts: '" + *s + "'");
            v.push_back(static_cast<std::size_t>(x));
        }
    }
    std::string joined;
    for (std::size_t j = 0; j < v.size(); ++j) joined += (j ? "," : "") + std::to_string(v[j]);
    record(key, joined);
    return v;
}

void SectionReader::finish() const {
    for (const auto& [k, used] : used_)
        if (!used) throw ConfigError(section_ + "." + k + ": unknown key");
}

ProcessModel read_model(SectionReader& r) {
    const std::string kind = r.text("model", "bm");
    auto stable = [&]() {
        StableParams p;
        p.alpha = r.real_required("alpha");
        p.c_plus = r.real("c_plus", 1.0);
        p.c_minus = r.real("c_minus", 1.0);
        p.scale = r.real("scale", 1.0);
        return p;
    };
    ProcessModel m;
    if (kind == "bm") {
        m = BrownianMotion{r.real("diffusion", 1.0)};
    } else if (kind == "stable") {
        m = StableProcess{stable()};
    } else if (kind == "stable_drift") {
        StableWithDrift s{stable(), 0.0};
        s.c = r.real("c", 0.0);
        m = s;
    } else if (kind == "sde") {
        LocallyStableSDE s;
        s.p = stable();
        const std::string d = r.text("drift", "tanh");
        if (d == "zero")
            s.drift = DriftSpec::zero();
        else if (d == "linear")
            s.drift = DriftSpec::linear(r.real("drift_a", -1.0), r.real("drift_bias", 0.0),
                                        r.real("drift_bound", std::numeric_limits<double>::infinity()));
        else if (d == "tanh")
            s.drift = DriftSpec::tanh(r.real("drift_amp", 0.5), r.real("drift_rate", 1.0));
        else
            throw ConfigError(r.name() + ".drift: expected zero, linear or tanh");
        const std::string t = r.text("tail", "tempered");
        if (t == "pure")
            s.tail = TailSpec::pure_stable();
        else if (t == "tempered")
            s.tail = TailSpec::tempered(r.real("tail_lambda", 1.0));
        else if (t == "truncated")
            s.tail = TailSpec::truncated();
        else
            throw ConfigError(r.name() + ".tail: expected pure, tempered or truncated");
        s.r_euler = static_cast<int>(r.integer("r_euler", 8));
        m = s;
    } else {
        throw ConfigError(r.name() + ".model: expected bm, stable, stable_drift or sde");
    }
    try {
        validate(m);
    } catch (const ConfigError& e) {
        throw ConfigError(r.name() + ".model: " + e.what());
    }
    return m;
}

FunctionalSpec parse_functional(const std::string& spec) {
    const auto parts = split(spec, ':');
    auto num = [&](std::size_t i) {
        double v;
        if (i >= parts.size() || !parse_real(parts[i], v)) throw ConfigError("functional: bad number in '" + spec + "'");
        return v;
    };
    if (parts.empty()) throw ConfigError("functional: empty");
    const std::string& k = parts[0];
    if (k == "below" && parts.size() == 2) return FunctionalSpec::indicator_below(num(1));
    if (k == "interval" && parts.size() == 3) return FunctionalSpec::indicator_interval(num(1), num(2));
    if (k == "scaled" && parts.size() == 3) return FunctionalSpec::scaled_indicator(num(1), num(2));
    if (k == "const" && parts.size() == 2) return FunctionalSpec::constant(num(1));
    throw ConfigError("functional: expected below:L, interval:A:B, scaled:RHO:L or const:V, got '" + spec + "'");
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string join_doubles(const std::vector<double>& v) {
    std::string out;
    for (std::size_t j = 0; j < v.size(); ++j) {
        if (j) out += ',';
        out += format_double(v[j]);
    }
    return out;
}

}  // namespace occlab
