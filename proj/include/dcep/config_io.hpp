#pragma once

#include <map>
#include <optional>
#include <string>

namespace dcep {

/// Flat "key = value" text config. Lines starting with '#' and blank lines
/// are ignored. Keys are dot-scoped by module, e.g. "plant.C_pw" or
/// "solver.eq_tol". Unknown keys are preserved on round-trip.
class KeyValueFile {
public:
    KeyValueFile() = default;

    static KeyValueFile load(const std::string& path);
    void save(const std::string& path) const;

    static KeyValueFile parse(const std::string& text);
    std::string to_string() const;

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    std::optional<double> get_double(const std::string& key) const;
    std::optional<long> get_int(const std::string& key) const;
    std::optional<std::string> get_string(const std::string& key) const;

    void set_double(const std::string& key, double v);
    void set_int(const std::string& key, long v);
    void set_string(const std::string& key, const std::string& v);

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

}  // namespace dcep
