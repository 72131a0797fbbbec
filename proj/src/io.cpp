#include "transposer/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace transposer {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

double parse_double(const std::string& token) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(token, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("malformed number '" + token + "'");
    }
    if (used != token.size()) throw std::invalid_argument("malformed number '" + token + "'");
    return v;
}

int parse_int(const std::string& token) {
    std::size_t used = 0;
    int v = 0;
    try {
        v = std::stoi(token, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("malformed integer '" + token + "'");
    }
    if (used != token.size()) throw std::invalid_argument("malformed integer '" + token + "'");
    return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        const std::size_t next = line.find(sep, pos);
        out.push_back(line.substr(pos, next == std::string::npos ? std::string::npos : next - pos));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return out;
}

struct ChaosCsv {
    int slots = 0;
    int degree = 0;
    int modes = 0;
    bool is_vector = false;
    std::vector<std::tuple<int, int, MultiIndex, double>> rows;  // mode, slot, index, coeff
};

ChaosCsv parse_chaos_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    ChaosCsv out;
    bool meta_seen = false;
    bool header_seen = false;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream meta(line.substr(1));
            std::string token;
            while (meta >> token) {
                const std::size_t eq = token.find('=');
                if (eq == std::string::npos) continue;
                const std::string key = token.substr(0, eq);
                const std::string value = token.substr(eq + 1);
                if (key == "N") out.slots = parse_int(value);
                if (key == "M") out.degree = parse_int(value);
                if (key == "modes") out.modes = parse_int(value);
                if (key == "kind") out.is_vector = value == "chaos_vec";
                meta_seen = true;
            }
            continue;
        }
        if (!header_seen) {
            if (line != "mode,slot,multi_index,coeff") {
                throw std::invalid_argument("line " + std::to_string(lineno) +
                                            ": expected header mode,slot,multi_index,coeff");
            }
            header_seen = true;
            continue;
        }
        const auto fields = split(line, ',');
        if (fields.size() != 4) {
            throw std::invalid_argument("line " + std::to_string(lineno) +
                                        ": expected 4 comma-separated fields");
        }
        out.rows.emplace_back(parse_int(fields[0]), parse_int(fields[1]),
                              MultiIndex::parse(fields[2]), parse_double(fields[3]));
    }
    if (!meta_seen || !header_seen) {
        throw std::invalid_argument("chaos CSV needs the metadata comment and the column header");
    }
    if (out.slots < 0 || out.degree < 0 || out.modes < 1) {
        throw std::invalid_argument("chaos CSV metadata is incomplete (need N, M, modes)");
    }
    return out;
}

}  // namespace

std::string chaos_to_csv(const ChaosRv& v) {
    std::ostringstream out;
    const ChaosCatalog& cat = v.catalog();
    out << "# schema=1\n";
    out << "# kind=chaos_rv N=" << cat.slots() << " M=" << cat.max_degree()
        << " modes=" << v.modes() << "\n";
    out << "mode,slot,multi_index,coeff\n";
    for (int m = 0; m < v.modes(); ++m) {
        for (int i = 0; i < cat.dim(); ++i) {
            const double c = v.at(m, i);
            if (c == 0.0) continue;
            out << m << ",-1," << cat.index(i).to_string() << ',' << format_double(c) << "\n";
        }
    }
    return out.str();
}

std::string chaos_to_csv(const ChaosVec& v) {
    std::ostringstream out;
    const ChaosCatalog& cat = v.catalog();
    out << "# schema=1\n";
    out << "# kind=chaos_vec N=" << cat.slots() << " M=" << cat.max_degree()
        << " modes=" << v.modes() << " degree_bound=" << v.degree_bound() << "\n";
    out << "mode,slot,multi_index,coeff\n";
    for (int m = 0; m < v.modes(); ++m) {
        for (int k = 0; k < v.slots(); ++k) {
            for (int i = 0; i < cat.dim(); ++i) {
                const double c = v.at(k, m, i);
                if (c == 0.0) continue;
                out << m << ',' << k << ',' << cat.index(i).to_string() << ','
                    << format_double(c) << "\n";
            }
        }
    }
    return out.str();
}

ChaosRv chaos_rv_from_csv(const std::string& text, const CatalogLimits& limits) {
    const ChaosCsv parsed = parse_chaos_csv(text);
    if (parsed.is_vector) throw std::invalid_argument("expected a chaos_rv file, got chaos_vec");
    const CatalogPtr cat = make_catalog(parsed.slots, parsed.degree, limits);
    ChaosRv out(cat, parsed.modes);
    for (const auto& [mode, slot, idx, coeff] : parsed.rows) {
        if (slot != -1) throw std::invalid_argument("chaos_rv rows must use slot=-1");
        if (mode < 0 || mode >= parsed.modes) throw std::invalid_argument("mode out of range");
        out.at(mode, cat->ordinal(idx)) = coeff;
    }
    return out;
}

ChaosVec chaos_vec_from_csv(const std::string& text, const CatalogLimits& limits) {
    const ChaosCsv parsed = parse_chaos_csv(text);
    if (!parsed.is_vector) throw std::invalid_argument("expected a chaos_vec file, got chaos_rv");
    const CatalogPtr cat = make_catalog(parsed.slots, parsed.degree, limits);
    ChaosVec out(cat, parsed.modes, parsed.degree);
    for (const auto& [mode, slot, idx, coeff] : parsed.rows) {
        if (mode < 0 || mode >= parsed.modes) throw std::invalid_argument("mode out of range");
        if (slot < 0 || slot >= parsed.slots) {
            throw std::invalid_argument("chaos_vec slot out of range");
        }
        if (idx.support_end() > slot) {
            throw std::invalid_argument("slot " + std::to_string(slot) +
                                        " coefficient on index " + idx.to_string() +
                                        " violates adaptedness");
        }
        out.at(slot, mode, cat->ordinal(idx)) = coeff;
    }
    return out;
}

std::string spectral_to_csv(const SpectralCoeffs& c) {
    std::ostringstream out;
    out << "# schema=1\n";
    out << "mode,coeff\n";
    for (int m = 0; m < c.modes(); ++m) {
        out << (m + 1) << ',' << format_double(c.values[m]) << "\n";
    }
    return out.str();
}

SpectralCoeffs spectral_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    SpectralCoeffs out;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line != "mode,coeff") throw std::invalid_argument("expected header mode,coeff");
            header_seen = true;
            continue;
        }
        const auto fields = split(line, ',');
        if (fields.size() != 2) throw std::invalid_argument("expected 2 fields per row");
        const int mode = parse_int(fields[0]);
        if (mode != out.modes() + 1) {
            throw std::invalid_argument("spectral modes must be consecutive from 1");
        }
        out.values.push_back(parse_double(fields[1]));
    }
    if (!header_seen) throw std::invalid_argument("missing mode,coeff header");
    return out;
}

std::string samples_to_csv(std::span<const double> x, std::span<const double> f) {
    if (x.size() != f.size()) throw std::invalid_argument("sample column length mismatch");
    std::ostringstream out;
    out << "# schema=1\n";
    out << "x,value\n";
    for (std::size_t i = 0; i < x.size(); ++i) {
        out << format_double(x[i]) << ',' << format_double(f[i]) << "\n";
    }
    return out.str();
}

void samples_from_csv(const std::string& text, std::vector<double>& x, std::vector<double>& f) {
    std::istringstream in(text);
    std::string line;
    x.clear();
    f.clear();
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line != "x,value") throw std::invalid_argument("expected header x,value");
            header_seen = true;
            continue;
        }
        const auto fields = split(line, ',');
        if (fields.size() != 2) throw std::invalid_argument("expected 2 fields per row");
        x.push_back(parse_double(fields[0]));
        f.push_back(parse_double(fields[1]));
    }
    if (!header_seen) throw std::invalid_argument("missing x,value header");
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open " + path.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::map<std::string, std::string> out;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::size_t first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("line " + std::to_string(lineno) +
                                        ": expected key=value");
        }
        std::string key = line.substr(first, eq - first);
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
        std::string value = line.substr(eq + 1);
        const std::size_t vfirst = value.find_first_not_of(" \t");
        value = vfirst == std::string::npos ? "" : value.substr(vfirst);
        while (!value.empty() && (value.back() == ' ' || value.back() == '\t')) value.pop_back();
        if (key.empty()) {
            throw std::invalid_argument("line " + std::to_string(lineno) + ": empty key");
        }
        if (!out.emplace(key, value).second) {
            throw std::invalid_argument("duplicate key '" + key + "'");
        }
    }
    return out;
}

std::string Config::get_string(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) throw std::invalid_argument("missing required key '" + key + "'");
    return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key) const { return parse_double(get_string(key)); }

double Config::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

int Config::get_int(const std::string& key) const { return parse_int(get_string(key)); }

int Config::get_int(const std::string& key, int fallback) const {
    return has(key) ? get_int(key) : fallback;
}

std::vector<double> Config::get_doubles(const std::string& key) const {
    std::string raw = get_string(key);
    for (char& c : raw) {
        if (c == ',') c = ' ';
    }
    std::istringstream in(raw);
    std::vector<double> out;
    std::string token;
    while (in >> token) out.push_back(parse_double(token));
    if (out.empty()) throw std::invalid_argument("key '" + key + "' has no numeric values");
    return out;
}

void Config::apply_override(const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw std::invalid_argument("override must look like key=value, got '" + assignment + "'");
    }
    kv_[assignment.substr(0, eq)] = assignment.substr(eq + 1);
}

void Config::reject_unknown(const std::vector<std::string>& known) const {
    for (const auto& [key, value] : kv_) {
        bool ok = false;
        for (const auto& k : known) {
            if (key == k) {
                ok = true;
                break;
            }
        }
        if (!ok) throw std::invalid_argument("unknown key '" + key + "'");
    }
}

}  // namespace transposer
