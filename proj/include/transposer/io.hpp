#pragma once

#include "transposer/chaos.hpp"
#include "transposer/spectral.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace transposer {

// Chaos coefficients travel as CSV with a schema comment, a metadata
// comment, the header `mode,slot,multi_index,coeff` and one row per nonzero
// coefficient. Random variables use slot = -1. Doubles are printed with 17
// significant digits so the round trip is bit-exact.
std::string chaos_to_csv(const ChaosRv& v);
std::string chaos_to_csv(const ChaosVec& v);
ChaosRv chaos_rv_from_csv(const std::string& text, const CatalogLimits& limits = {});
ChaosVec chaos_vec_from_csv(const std::string& text, const CatalogLimits& limits = {});

// SpectralCoeffs: CSV `mode,coeff`; function samples: CSV `x,value`.
std::string spectral_to_csv(const SpectralCoeffs& c);
SpectralCoeffs spectral_from_csv(const std::string& text);
std::string samples_to_csv(std::span<const double> x, std::span<const double> f);
void samples_from_csv(const std::string& text, std::vector<double>& x, std::vector<double>& f);

std::string read_file(const std::filesystem::path& path);
// Writes via a temporary file and rename, so concurrent sweep points never
// expose partial files.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// Flat key=value problem grammar. '#' starts a comment, blank lines are
// skipped, keys may appear once.
std::map<std::string, std::string> parse_key_values(const std::string& text);

// Typed access with one-line errors; `known` rejects unknown keys.
class Config {
public:
    explicit Config(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

    bool has(const std::string& key) const { return kv_.count(key) > 0; }
    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key) const;
    int get_int(const std::string& key, int fallback) const;
    std::vector<double> get_doubles(const std::string& key) const;  // whitespace/comma separated

    void apply_override(const std::string& assignment);  // "key=value"
    void reject_unknown(const std::vector<std::string>& known) const;

private:
    std::map<std::string, std::string> kv_;
};

std::string format_double(double v);  // %.17g

}  // namespace transposer
