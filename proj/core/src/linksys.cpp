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

#include "isac/linksys.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "isac/messages.hpp"

namespace isac
{

namespace
{
constexpr double kBoltzmann = 1.380649e-23;
}

void ArrayConfig::validate() const
{
    if (nx < 1 || ny < 1)
        throw std::invalid_argument("array: nx and ny must be >= 1");
    if (!(spacing > 0))
        throw std::invalid_argument("array: element spacing must be positive");
}

DftCodebook DftCodebook::make(const ArrayConfig &a)
{
    a.validate();
    DftCodebook cb{a.nx, a.ny, {}};
    const double scale = 1.0 / std::sqrt(double(a.size()));
    for (std::uint32_t bx = 0; bx < a.nx; ++bx)
        for (std::uint32_t by = 0; by < a.ny; ++by)
        {
            std::vector<cplx> w(a.size());
            for (std::uint32_t mx = 0; mx < a.nx; ++mx)
                for (std::uint32_t my = 0; my < a.ny; ++my)
                    w[mx * a.ny + my] =
                        std::polar(scale, 2.0 * M_PI * (double(mx * bx) / a.nx + double(my * by) / a.ny));
            cb.beams.push_back(std::move(w));
        }
    return cb;
}

double OfdmConfig::noise_power_w() const
{
    return kBoltzmann * temperature_k * spacing_hz * db_to_linear(noise_figure_db);
}

void OfdmConfig::validate() const
{
    if (subcarriers < 1)
        throw std::invalid_argument("ofdm: at least one subcarrier required");
    if (!(spacing_hz > 0))
        throw std::invalid_argument("ofdm: subcarrier spacing must be positive");
}

double BlerCurve::operator()(double sinr_db) const
{
    return 1.0 / (1.0 + std::exp(slope_per_db * (sinr_db - threshold_db)));
}

std::vector<cplx> steering_vector(const ArrayConfig &a, const Vec3 &u)
{
    std::vector<cplx> v(a.size());
    const double scale = 1.0 / std::sqrt(double(a.size()));
    for (std::uint32_t mx = 0; mx < a.nx; ++mx)
        for (std::uint32_t my = 0; my < a.ny; ++my)
            v[mx * a.ny + my] = std::polar(scale, 2.0 * M_PI * a.spacing * (mx * u.x + my * u.y));
    return v;
}

Vec3 to_array_frame(const ArrayConfig &a, const Pose &tx_pose, const Vec3 &world_dir)
{
    const Quat r = (tx_pose.rotation * a.mount.rotation).normalized();
    return r.conjugate().rotate(world_dir);
}

Cfr cir_to_cfr(const Cir &cir, const ArrayConfig &a, const Pose &tx_pose, const OfdmConfig &ofdm)
{
    a.validate();
    ofdm.validate();
    Cfr out{a.size(), ofdm.subcarriers, std::vector<cplx>(a.size() * ofdm.subcarriers)};
    const double root_n = std::sqrt(double(a.size()));
    const double centre = (ofdm.subcarriers - 1) / 2.0;
    for (const auto &p : cir.paths)
    {
        const auto v = steering_vector(a, to_array_frame(a, tx_pose, p.departure));
        for (std::size_t k = 0; k < ofdm.subcarriers; ++k)
        {
            const cplx phase = std::polar(1.0, -2.0 * M_PI * ofdm.spacing_hz * (double(k) - centre) * p.delay);
            const cplx g = p.amplitude * root_n * phase;
            for (std::size_t n = 0; n < v.size(); ++n)
                out.h[k * out.elements + n] += g * v[n];
        }
    }
    return out;
}

cplx beam_response(const Cfr &h, const std::vector<cplx> &w, std::size_t k)
{
    cplx acc = 0;
    for (std::size_t n = 0; n < h.elements; ++n)
        acc += std::conj(w[n]) * h.h[k * h.elements + n];
    return acc;
}

LinkKpi evaluate_link(const Cfr &h, const DftCodebook &cb, const OfdmConfig &ofdm, double tx_power_dbm,
                      const std::vector<Interferer> &interferers, const BlerCurve &bler)
{
    if (cb.size() == 0)
        throw std::invalid_argument("link: empty codebook");
    ofdm.validate();
    if (h.subcarriers != ofdm.subcarriers || h.elements != cb.beams.front().size())
        throw std::invalid_argument("link: CFR dimensions do not match codebook/numerology");

    const std::size_t nsc = h.subcarriers;
    const double n0 = ofdm.noise_power_w();
    std::vector<double> noise(nsc, n0);
    for (const auto &i : interferers)
    {
        if (i.h.subcarriers != nsc || i.h.elements != h.elements || i.beam >= cb.size())
            throw std::invalid_argument("link: interferer dimensions do not match");
        const double p = dbm_to_watt(i.tx_power_dbm) / double(nsc);
        for (std::size_t k = 0; k < nsc; ++k)
            noise[k] += p * std::norm(beam_response(i.h, cb.beams[i.beam], k));
    }

    const double p_sc = dbm_to_watt(tx_power_dbm) / double(nsc);
    LinkKpi kpi;
    std::vector<double> mean_log(cb.size());
    std::size_t best = 0;
    for (std::size_t b = 0; b < cb.size(); ++b)
    {
        double acc = 0;
        for (std::size_t k = 0; k < nsc; ++k)
            acc += std::log2(1.0 + p_sc * std::norm(beam_response(h, cb.beams[b], k)) / noise[k]);
        mean_log[b] = acc / double(nsc);
        if (mean_log[b] > mean_log[best])
            best = b;
    }
    for (double m : mean_log)
        kpi.beam_sinr_db.push_back(linear_to_db(std::exp2(m) - 1.0));
    kpi.best_beam = static_cast<std::uint16_t>(best);
    kpi.sinr_eff_db = kpi.beam_sinr_db[best];
    kpi.rate = mean_log[best];
    kpi.bler = bler(kpi.sinr_eff_db);
    return kpi;
}

void LinkKpi::encode(ByteWriter &w) const
{
    encode_header(w, header);
    w.str(tx_id);
    w.str(rx_id);
    w.u16(best_beam);
    w.f64(sinr_eff_db);
    w.f64(bler);
    w.f64(rate);
    w.u32(static_cast<std::uint32_t>(beam_sinr_db.size()));
    for (double s : beam_sinr_db)
        w.f64(s);
}

LinkKpi LinkKpi::decode(ByteReader &r)
{
    LinkKpi k;
    k.header = decode_header(r);
    k.tx_id = r.str();
    k.rx_id = r.str();
    k.best_beam = r.u16();
    k.sinr_eff_db = r.f64();
    k.bler = r.f64();
    k.rate = r.f64();
    const std::uint32_t n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i)
        k.beam_sinr_db.push_back(r.f64());
    return k;
}

} // namespace isac
