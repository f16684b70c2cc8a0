// Snapshot IO: a JSON sidecar header plus a raw binary block of the five
// field arrays (W, Z, A2, A3, K) as little-endian float64, i1 slowest /
// i3 fastest.
#include <bit>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "shockss/fields.h"

static_assert(std::endian::native == std::endian::little,
              "snapshot IO assumes a little-endian host");

namespace shockss {

namespace {

using nlohmann::json;

json modulation_to_json(const ModulationState& m)
{
    return json{{"kappa", m.kappa},
                {"tau", m.tau},
                {"xi", m.xi},
                {"n_check", m.n_check},
                {"phi", m.phi},
                {"rates",
                 {{"kappa_dot", m.rates.kappa_dot},
                  {"tau_dot", m.rates.tau_dot},
                  {"xi_dot", m.rates.xi_dot},
                  {"n_dot", m.rates.n_dot},
                  {"phi_dot", m.rates.phi_dot}}}};
}

ModulationState modulation_from_json(const json& j)
{
    ModulationState m;
    m.kappa = j.at("kappa");
    m.tau = j.at("tau");
    m.xi = j.at("xi");
    m.n_check = j.at("n_check");
    m.phi = j.at("phi");
    const json& r = j.at("rates");
    m.rates.kappa_dot = r.at("kappa_dot");
    m.rates.tau_dot = r.at("tau_dot");
    m.rates.xi_dot = r.at("xi_dot");
    m.rates.n_dot = r.at("n_dot");
    m.rates.phi_dot = r.at("phi_dot");
    return m;
}

}  // namespace

void write_snapshot(const std::string& base, const SelfSimilarFields& f)
{
    json header = {
        {"version", 1},
        {"s", f.s},
        {"t", f.t},
        {"gamma", f.params.gamma},
        {"epsilon", f.epsilon},
        {"kappa0", f.kappa0},
        {"modulation", modulation_to_json(f.mod)},
        {"grid",
         {{"n", f.grid.n},
          {"half_width", f.grid.half_width},
          {"stretch_a", f.grid.stretch_a}}},
        {"fields", {"W", "Z", "A2", "A3", "K"}},
        {"binary",
         {{"file", base.substr(base.find_last_of('/') + 1) + ".bin"},
          {"dtype", "float64le"},
          {"order", "i1 slowest, i3 fastest"}}},
    };
    std::ofstream jf(base + ".json");
    if (!jf) throw std::runtime_error("write_snapshot: cannot open " + base + ".json");
    jf << header.dump(2) << "\n";

    std::ofstream bf(base + ".bin", std::ios::binary);
    if (!bf) throw std::runtime_error("write_snapshot: cannot open " + base + ".bin");
    for (const auto* arr : {&f.W, &f.Z, &f.A2, &f.A3, &f.K}) {
        bf.write(reinterpret_cast<const char*>(arr->data()),
                 static_cast<std::streamsize>(arr->size() * sizeof(double)));
    }
    if (!bf) throw std::runtime_error("write_snapshot: short write to " + base + ".bin");
}

SelfSimilarFields read_snapshot(const std::string& base)
{
    std::ifstream jf(base + ".json");
    if (!jf) throw std::runtime_error("read_snapshot: missing " + base + ".json");
    json header = json::parse(jf);

    const auto& gj = header.at("grid");
    const std::array<int, 3> n = gj.at("n");
    const std::array<double, 3> hw = gj.at("half_width");
    Grid grid = make_grid(n, hw, gj.at("stretch_a"));

    SelfSimilarFields f = make_fields(std::move(grid),
                                      make_params(header.at("gamma").get<double>()),
                                      header.at("epsilon"), header.at("kappa0"));
    f.s = header.at("s");
    f.t = header.at("t");
    f.mod = modulation_from_json(header.at("modulation"));

    std::ifstream bf(base + ".bin", std::ios::binary | std::ios::ate);
    if (!bf) throw std::runtime_error("read_snapshot: missing " + base + ".bin");
    const auto expect =
        static_cast<std::streamoff>(5 * f.grid.size() * sizeof(double));
    if (bf.tellg() != expect) {
        throw std::runtime_error("read_snapshot: corrupt snapshot (binary length "
                                 "does not match header) in " +
                                 base + ".bin");
    }
    bf.seekg(0);
    for (auto* arr : {&f.W, &f.Z, &f.A2, &f.A3, &f.K}) {
        bf.read(reinterpret_cast<char*>(arr->data()),
                static_cast<std::streamsize>(arr->size() * sizeof(double)));
    }
    if (!bf) throw std::runtime_error("read_snapshot: short read from " + base + ".bin");
    return f;
}

}  // namespace shockss
