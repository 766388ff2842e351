#include "droplet/radial.hpp"
#include "droplet/minmove.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>

namespace droplet {

double zeta(double s)
{
    if (!(s > 0.0) || !std::isfinite(s))
        throw InvalidArgument("zeta requires s > 0");
    double lo = 1.0, hi = 1.0 + s + std::sqrt(2.0 * s);
    double r = 1.0 + s / (1.0 + std::log1p(s));
    if (!(r > lo && r < hi))
        r = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        double f = r * std::log(r) - s;
        if (f > 0.0)
            hi = r;
        else
            lo = r;
        double step = f / (std::log(r) + 1.0);
        double next = r - step;
        if (!(next > lo && next < hi))
            next = 0.5 * (lo + hi);
        if (std::abs(next - r) <= 1e-15 * next) {
            r = next;
            break;
        }
        r = next;
    }
    return r;
}

const char* regime_name(Regime r)
{
    switch (r) {
    case Regime::Advancing:
        return "advancing";
    case Regime::Receding:
        return "receding";
    default:
        return "pinned";
    }
}

double RadialProfile::operator()(double r) const
{
    if (r >= R)
        return 0.0;
    return F * (1.0 - std::log(r) / std::log(R));
}

RadialProfile radial_profile(double lambda, double F)
{
    if (!(lambda > 0.0) || !(F > 0.0))
        throw InvalidArgument("radial_profile requires lambda > 0 and F > 0");
    return {zeta(F / lambda), F};
}

bool in_region_S(const RadialState& s, const HysteresisParams& p)
{
    double lo = zeta(s.F / std::sqrt(p.q_plus()));
    double hi = zeta(s.F / std::sqrt(p.q_minus()));
    return s.R >= lo && s.R <= hi;
}

std::vector<RadialStep> radial_evolve(const Schedule& s, double R0, const HysteresisParams& p)
{
    p.validate();
    auto pts = s.points();
    RadialState st{R0, pts.front().second, 0.0};
    // Allow a few ulps so states placed exactly on a branch curve are accepted.
    double lo = zeta(st.F / std::sqrt(p.q_plus())), hi = zeta(st.F / std::sqrt(p.q_minus()));
    if (R0 < lo * (1 - 1e-12) || R0 > hi * (1 + 1e-12))
        throw InvalidArgument("initial radial state lies outside the hysteresis region");
    st.lambda = st.F / (R0 * std::log(R0));
    std::vector<RadialStep> out;
    out.push_back({pts.front().first, st, Regime::Pinned});
    for (std::size_t k = 1; k < pts.size(); ++k) {
        double F = pts[k].second;
        double adv = zeta(F / std::sqrt(p.q_plus()));
        double rec = zeta(F / std::sqrt(p.q_minus()));
        Regime g = Regime::Pinned;
        if (adv > st.R) {
            st.R = adv;
            g = Regime::Advancing;
        } else if (rec < st.R) {
            st.R = rec;
            g = Regime::Receding;
        }
        st.F = F;
        st.lambda = F / (st.R * std::log(st.R));
        out.push_back({pts[k].first, st, g});
    }
    return out;
}

void write_radial_csv(const std::string& path, const std::vector<RadialStep>& steps)
{
    std::ofstream f(path);
    if (!f)
        throw Error("cannot write " + path);
    f << "t,F,R,lambda,regime\n";
    f << std::setprecision(17);
    for (const auto& s : steps)
        f << s.t << ',' << s.state.F << ',' << s.state.R << ',' << s.state.lambda << ','
          << regime_name(s.regime) << '\n';
}

double halfline_optimum(double F, double Q)
{
    if (!(F > 0.0) || !(Q > 0.0))
        throw InvalidArgument("halfline_optimum requires F, Q > 0");
    return F / std::sqrt(Q);
}

} // namespace droplet
