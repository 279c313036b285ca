// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "isac/ckm.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "isac/prng.hpp"
#include "isac/text.hpp"

namespace isac
{

namespace
{

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t fnv_bytes(const std::vector<std::uint8_t> &b)
{
    return fnv1a64(std::string_view(reinterpret_cast<const char *>(b.data()), b.size()));
}

} // namespace

void GridSpec::validate() const
{
    if (nx < 1 || ny < 1)
        throw CkmError("grid: nx and ny must be >= 1");
    if (!(cell > 0))
        throw CkmError("grid: cell size must be positive");
}

const CkmLayer &Ckm::layer(const std::string &name) const
{
    for (const auto &l : layers)
        if (l.name == name)
            return l;
    throw std::out_of_range("ckm: no layer '" + name + "'");
}

CellValues Ckm::cell(std::uint32_t i, std::uint32_t j) const
{
    CellValues v;
    for (std::size_t l = 0; l < kLayerCount; ++l)
        v[l] = layers[l].values[std::size_t(j) * grid.nx + i];
    return v;
}

double beam_gain(const Cfr &h, const std::vector<cplx> &w, const std::vector<PropPath> &paths)
{
    double total = 0;
    for (const auto &p : paths)
        total += std::norm(p.amplitude);
    if (total <= 0)
        return 0;
    double acc = 0;
    for (std::size_t k = 0; k < h.subcarriers; ++k)
        acc += std::norm(beam_response(h, w, k));
    return acc / double(h.subcarriers) / total;
}

CellValues reduce_cell(const std::vector<PropPath> &paths, const LinkKpi &kpi, double beam_gain_db,
                       double tx_power_dbm)
{
    CellValues v;
    v.fill(kNaN);
    double total = 0;
    for (const auto &p : paths)
        total += std::norm(p.amplitude);
    if (paths.empty() || !(total > 0))
        return v;

    double m1 = 0, m2 = 0;
    cplx r = 0;
    for (const auto &p : paths)
    {
        const double w = std::norm(p.amplitude) / total;
        m1 += w * p.delay;
        m2 += w * p.delay * p.delay;
        r += w * std::polar(1.0, azimuth(-p.arrival));
    }
    v[kPathLoss] = -linear_to_db(total);
    v[kRxPower] = tx_power_dbm - v[kPathLoss] + beam_gain_db;
    v[kDelaySpread] = std::sqrt(std::max(0.0, m2 - m1 * m1));
    v[kAngularSpread] = std::sqrt(-2.0 * std::log(std::min(1.0, std::abs(r))));
    v[kSinrEff] = kpi.sinr_eff_db;
    v[kRate] = kpi.rate;
    v[kBestBeam] = kpi.best_beam;
    return v;
}

std::uint64_t ckm_digest(const RtScene &scene, const Transceiver &tx, const GridSpec &g, const LinkSetup &s)
{
    ByteWriter w;
    w.str("ckm-v1");
    const auto &m = scene.mesh();
    w.u32(static_cast<std::uint32_t>(m.size()));
    for (std::uint32_t t = 0; t < m.size(); ++t)
    {
        for (int c = 0; c < 3; ++c)
            w.vec3(m.vertex(t, c));
        w.f64(scene.material(t).eps_r);
        w.f64(scene.material(t).sigma);
    }
    w.vec3(tx.pose.translation);
    w.quat(tx.pose.rotation);
    w.f64(g.x0), w.f64(g.y0), w.u32(g.nx), w.u32(g.ny), w.f64(g.cell), w.f64(g.rx_height);
    w.f64(s.rt.carrier_hz), w.u32(static_cast<std::uint32_t>(s.rt.max_order));
    w.u32(s.array.nx), w.u32(s.array.ny), w.f64(s.array.spacing);
    w.vec3(s.array.mount.translation), w.quat(s.array.mount.rotation);
    w.u32(s.ofdm.subcarriers), w.f64(s.ofdm.spacing_hz), w.f64(s.ofdm.noise_figure_db);
    w.f64(s.ofdm.temperature_k);
    w.f64(s.bler.threshold_db), w.f64(s.bler.slope_per_db), w.f64(s.tx_power_dbm);
    return fnv_bytes(w.bytes());
}

bool point_inside_geometry(const Bvh &bvh, const Vec3 &p)
{
    // Slightly skewed upward ray so it never grazes axis-aligned edges.
    const Vec3 dir = normalized(Vec3{0.0123, 0.0271, 1.0});
    int crossings = 0;
    double t = 0;
    while (auto hit = bvh.first_hit(Ray::make(p, dir, t)))
    {
        ++crossings;
        t = hit->t + kSelfHitEpsilon;
    }
    return crossings % 2 == 1;
}

CellValues evaluate_cell(const PathSolver &solver, const Transceiver &rx, const Pose &tx_pose,
                         const LinkSetup &s, const DftCodebook &cb)
{
    auto paths = solver.solve(rx);
    const Cir cir = assemble_cir(paths, SimTime{0}, "tx", "rx");
    const Cfr h = cir_to_cfr(cir, s.array, tx_pose, s.ofdm);
    const LinkKpi kpi = evaluate_link(h, cb, s.ofdm, s.tx_power_dbm, {}, s.bler);
    const double g = beam_gain(h, cb.beams[kpi.best_beam], cir.paths);
    return reduce_cell(cir.paths, kpi, linear_to_db(g), s.tx_power_dbm);
}

Ckm generate_ckm(const RtScene &scene, const Transceiver &tx, const GridSpec &grid, const LinkSetup &setup,
                 unsigned workers)
{
    grid.validate();
    setup.rt.validate();
    if (point_inside_geometry(scene.bvh(), tx.pose.translation))
        throw CkmError("ckm: transmitter lies inside scene geometry");

    const PathSolver solver(scene, setup.rt, tx);
    const DftCodebook cb = DftCodebook::make(setup.array);
    std::vector<CellValues> results(grid.cells());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t c = next++; c < results.size(); c = next++)
        {
            Transceiver rx;
            rx.pose.translation = grid.center(static_cast<std::uint32_t>(c % grid.nx),
                                              static_cast<std::uint32_t>(c / grid.nx));
            results[c] = evaluate_cell(solver, rx, tx.pose, setup, cb);
        }
    };
    workers = std::max(1u, workers);
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w)
        pool.emplace_back(work);
    work();
    for (auto &t : pool)
        t.join();

    Ckm ckm{grid, tx.pose, ckm_digest(scene, tx, grid, setup), {}};
    for (std::size_t l = 0; l < kLayerCount; ++l)
    {
        CkmLayer layer{kLayerNames[l], kLayerUnits[l], std::vector<float>(grid.cells())};
        for (std::size_t c = 0; c < grid.cells(); ++c)
            layer.values[c] = static_cast<float>(results[c][l]);
        ckm.layers.push_back(std::move(layer));
    }
    return ckm;
}

void write_raster(const std::filesystem::path &path, const GridSpec &g, const CkmLayer &layer)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw CkmError("cannot write " + path.string());
    os << "CKM1 " << layer.name << ' ' << g.nx << ' ' << g.ny << ' ' << fmt_double(g.x0) << ' '
       << fmt_double(g.y0) << ' ' << fmt_double(g.cell) << ' ' << fmt_double(g.rx_height) << ' ' << layer.units
       << '\n';
    ByteWriter w;
    for (float v : layer.values)
        w.f32(v);
    os.write(reinterpret_cast<const char *>(w.bytes().data()), static_cast<std::streamsize>(w.bytes().size()));
    if (!os)
        throw CkmError("write failed: " + path.string());
}

Raster read_raster(const std::filesystem::path &path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw CkmError("cannot open " + path.string());
    std::string line;
    std::getline(is, line);
    const auto words = split_words(line);
    if (words.size() != 9 || words[0] != "CKM1")
        throw CkmError("bad raster header in " + path.string());
    Raster r;
    r.layer.name = words[1];
    r.grid.nx = static_cast<std::uint32_t>(parse_int(words[2]));
    r.grid.ny = static_cast<std::uint32_t>(parse_int(words[3]));
    r.grid.x0 = parse_double(words[4]);
    r.grid.y0 = parse_double(words[5]);
    r.grid.cell = parse_double(words[6]);
    r.grid.rx_height = parse_double(words[7]);
    r.layer.units = words[8];
    r.grid.validate();
    std::vector<std::uint8_t> buf(r.grid.cells() * 4);
    is.read(reinterpret_cast<char *>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(is.gcount()) != buf.size() || is.peek() != std::char_traits<char>::eof())
        throw CkmError("raster payload size mismatch in " + path.string());
    ByteReader br(buf);
    r.layer.values.resize(r.grid.cells());
    for (auto &v : r.layer.values)
        v = br.f32();
    return r;
}

std::array<std::uint8_t, 3> ramp_color(double t)
{
    static constexpr std::array<std::array<double, 3>, 5> stops{
        {{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
    t = std::clamp(t, 0.0, 1.0) * 4.0;
    const auto s = std::min<std::size_t>(3, static_cast<std::size_t>(t));
    const double f = t - double(s);
    std::array<std::uint8_t, 3> c;
    for (int k = 0; k < 3; ++k)
        c[k] = static_cast<std::uint8_t>(std::lround(stops[s][k] + (stops[s + 1][k] - stops[s][k]) * f));
    return c;
}

void write_heatmap(const std::filesystem::path &path, const GridSpec &g, const CkmLayer &layer)
{
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (float v : layer.values)
        if (std::isfinite(v))
            lo = std::min(lo, double(v)), hi = std::max(hi, double(v));
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw CkmError("cannot write " + path.string());
    os << "P6\n" << g.nx << ' ' << g.ny << "\n255\n";
    for (std::uint32_t row = 0; row < g.ny; ++row)
    {
        const std::uint32_t j = g.ny - 1 - row;
        for (std::uint32_t i = 0; i < g.nx; ++i)
        {
            const float v = layer.values[std::size_t(j) * g.nx + i];
            std::array<std::uint8_t, 3> c{0, 0, 0};
            if (std::isfinite(v))
                c = ramp_color(hi > lo ? (v - lo) / (hi - lo) : 0.0);
            os.write(reinterpret_cast<const char *>(c.data()), 3);
        }
    }
    if (!os)
        throw CkmError("write failed: " + path.string());
}

void write_outputs(const Ckm &ckm, const std::filesystem::path &dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw CkmError("cannot create " + dir.string() + ": " + ec.message());
    for (const auto &l : ckm.layers)
    {
        write_raster(dir / (l.name + ".ckm"), ckm.grid, l);
        write_heatmap(dir / (l.name + ".ppm"), ckm.grid, l);
    }
}

CellValues lookup(const Ckm &ckm, double x, double y)
{
    const auto &g = ckm.grid;
    const double fx = (x - g.x0) / g.cell, fy = (y - g.y0) / g.cell;
    if (!(fx >= 0 && fy >= 0 && fx <= g.nx && fy <= g.ny))
        throw std::out_of_range("ckm: lookup outside grid");
    const auto i = std::min<std::uint32_t>(g.nx - 1, static_cast<std::uint32_t>(fx));
    const auto j = std::min<std::uint32_t>(g.ny - 1, static_cast<std::uint32_t>(fy));
    return ckm.cell(i, j);
}

} // namespace isac
