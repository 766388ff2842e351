#include "droplet/scenario.hpp"

#include "json.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>

namespace droplet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::mutex print_mutex;

void say(const std::string& line)
{
    std::lock_guard<std::mutex> lock(print_mutex);
    std::cout << line << std::endl;
}

[[noreturn]] void bad(const std::string& field, const std::string& what)
{
    throw ConfigError(field + ": " + what);
}

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys)
{
    if (!j.is_object())
        bad(where, "expected an object");
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            bad(where.empty() ? it.key() : where + "." + it.key(), "unknown field");
}

const json& need(const json& j, const std::string& where, const char* key)
{
    if (!j.contains(key))
        bad(where.empty() ? key : where + "." + key, "required field missing");
    return j.at(key);
}

double number(const json& j, const std::string& field)
{
    if (!j.is_number())
        bad(field, "expected a number");
    double v = j.get<double>();
    if (!std::isfinite(v))
        bad(field, "must be finite");
    return v;
}

int integer(const json& j, const std::string& field)
{
    if (!j.is_number_integer())
        bad(field, "expected an integer");
    return j.get<int>();
}

bool boolean(const json& j, const std::string& field)
{
    if (!j.is_boolean())
        bad(field, "expected true or false");
    return j.get<bool>();
}

std::array<double, 2> pair(const json& j, const std::string& field)
{
    if (!j.is_array() || j.size() != 2)
        bad(field, "expected [x, y]");
    return {number(j[0], field + "[0]"), number(j[1], field + "[1]")};
}

void parse_domain(const json& j, Scenario& sc)
{
    const std::string w = "domain";
    only_keys(j, w, {"dim", "cells", "h", "cells_per_unit", "obstacles"});
    sc.dim = integer(need(j, w, "dim"), "domain.dim");
    if (sc.dim != 1 && sc.dim != 2)
        bad("domain.dim", "must be 1 or 2");
    const json& cells = need(j, w, "cells");
    if (!cells.is_array() || static_cast<int>(cells.size()) != sc.dim)
        bad("domain.cells", "expected " + std::to_string(sc.dim) + " integer(s)");
    sc.nx = integer(cells[0], "domain.cells[0]");
    sc.ny = sc.dim == 2 ? integer(cells[1], "domain.cells[1]") : 1;
    if (sc.nx < 3 || sc.ny < (sc.dim == 2 ? 3 : 1))
        bad("domain.cells", "grid too small");
    if (j.contains("h") == j.contains("cells_per_unit"))
        bad("domain", "give exactly one of h and cells_per_unit");
    if (j.contains("h"))
        sc.h = number(j.at("h"), "domain.h");
    else
        sc.h = 1.0 / number(j.at("cells_per_unit"), "domain.cells_per_unit");
    if (!(sc.h > 0.0))
        bad(j.contains("h") ? "domain.h" : "domain.cells_per_unit", "must be positive");

    if (sc.dim == 1) {
        if (j.contains("obstacles"))
            bad("domain.obstacles", "the 1d half-line has a fixed obstacle at x < 0");
        return;
    }
    const json& obs = need(j, w, "obstacles");
    if (!obs.is_array() || obs.empty())
        bad("domain.obstacles", "expected a non-empty list");
    double hx = 0.5 * sc.nx * sc.h - 10.0 * sc.h;
    double hy = 0.5 * sc.ny * sc.h - 10.0 * sc.h;
    auto inside = [&](double x, double y, double r, const std::string& f) {
        if (!(r > 0.0))
            bad(f + ".radius", "must be positive");
        if (std::abs(x) + r > hx || std::abs(y) + r > hy)
            bad(f, "obstacle must stay 10 cells away from the box edge");
    };
    for (std::size_t i = 0; i < obs.size(); ++i) {
        std::string f = "domain.obstacles[" + std::to_string(i) + "]";
        const json& o = obs[i];
        if (!o.is_object() || !o.contains("type") || !o.at("type").is_string())
            bad(f + ".type", "expected \"disk\" or \"segment\"");
        std::string type = o.at("type").get<std::string>();
        if (type == "disk") {
            only_keys(o, f, {"type", "center", "radius"});
            auto c = pair(need(o, f, "center"), f + ".center");
            double r = number(need(o, f, "radius"), f + ".radius");
            inside(c[0], c[1], r, f);
            sc.disks.push_back({c[0], c[1], r});
        } else if (type == "segment") {
            only_keys(o, f, {"type", "from", "to", "radius"});
            auto a = pair(need(o, f, "from"), f + ".from");
            auto b = pair(need(o, f, "to"), f + ".to");
            double r = number(need(o, f, "radius"), f + ".radius");
            inside(a[0], a[1], r, f);
            inside(b[0], b[1], r, f);
            sc.segments.push_back({a[0], a[1], b[0], b[1], r});
        } else {
            bad(f + ".type", "expected \"disk\" or \"segment\"");
        }
    }
}

void parse_schedule(const json& j, Scenario& sc)
{
    const std::string w = "schedule";
    only_keys(j, w, {"knots", "delta"});
    const json& knots = need(j, w, "knots");
    if (!knots.is_array() || knots.size() < 2)
        bad("schedule.knots", "expected at least two [t, F] pairs");
    for (std::size_t i = 0; i < knots.size(); ++i) {
        auto p = pair(knots[i], "schedule.knots[" + std::to_string(i) + "]");
        sc.schedule.times.push_back(p[0]);
        sc.schedule.F.push_back(p[1]);
    }
    sc.schedule.delta = number(need(j, w, "delta"), "schedule.delta");
    if (!(sc.schedule.delta > 0.0))
        bad("schedule.delta", "must be positive");
    try {
        sc.schedule.validate();
    } catch (const Error& e) {
        bad("schedule", e.what());
    }
}

void parse_initial(const json& j, Scenario& sc)
{
    const std::string w = "initial";
    if (!j.is_object() || !j.contains("type") || !j.at("type").is_string())
        bad("initial.type", "expected \"radial\", \"mask_file\" or \"settle\"");
    std::string type = j.at("type").get<std::string>();
    if (type == "radial") {
        only_keys(j, w, {"type", "radius", "lambda"});
        if (j.contains("radius") == j.contains("lambda"))
            bad("initial", "give exactly one of radius and lambda");
        if (j.contains("radius")) {
            sc.init = Scenario::Init::Radius;
            sc.init_value = number(j.at("radius"), "initial.radius");
        } else {
            sc.init = Scenario::Init::Lambda;
            sc.init_value = number(j.at("lambda"), "initial.lambda");
            if (sc.dim == 2 && !sc.segments.empty())
                bad("initial.lambda", "needs disk obstacles only");
        }
        if (!(sc.init_value > 0.0))
            bad("initial", "radius or lambda must be positive");
    } else if (type == "mask_file") {
        only_keys(j, w, {"type", "path"});
        const json& p = need(j, w, "path");
        if (!p.is_string())
            bad("initial.path", "expected a string");
        sc.init = Scenario::Init::MaskFile;
        sc.mask_file = p.get<std::string>();
    } else if (type == "settle") {
        only_keys(j, w, {"type"});
        sc.init = Scenario::Init::Settle;
    } else {
        bad("initial.type", "expected \"radial\", \"mask_file\" or \"settle\"");
    }
}

void parse_stepper(const json& j, Scenario& sc)
{
    const std::string w = "stepper";
    only_keys(j, w, {"max_block", "track_depth", "refresh_every", "tol", "collective", "bracket"});
    StepOptions& o = sc.run.step;
    if (j.contains("max_block"))
        o.max_block = integer(j.at("max_block"), "stepper.max_block");
    if (j.contains("track_depth"))
        o.track_depth = integer(j.at("track_depth"), "stepper.track_depth");
    if (j.contains("refresh_every"))
        o.refresh_every = integer(j.at("refresh_every"), "stepper.refresh_every");
    if (j.contains("tol"))
        o.tol = number(j.at("tol"), "stepper.tol");
    if (j.contains("collective"))
        o.collective = boolean(j.at("collective"), "stepper.collective");
    if (j.contains("bracket"))
        sc.run.bracket = boolean(j.at("bracket"), "stepper.bracket");
    if (o.max_block < 1 || o.max_block > 64)
        bad("stepper.max_block", "must lie in [1, 64]");
    if (o.track_depth < 1)
        bad("stepper.track_depth", "must be at least 1");
    if (o.refresh_every < 1)
        bad("stepper.refresh_every", "must be at least 1");
    if (!(o.tol >= 0.0))
        bad("stepper.tol", "must be non-negative");
}

void parse_output(const json& j, Scenario& sc)
{
    const std::string w = "output";
    only_keys(j, w, {"directory", "snapshot_stride", "certificates", "jump_threshold_cells",
                     "expect_jumps", "radial_compare", "tolerances"});
    if (j.contains("directory")) {
        if (!j.at("directory").is_string())
            bad("output.directory", "expected a string");
        sc.out_dir = j.at("directory").get<std::string>();
    }
    if (j.contains("snapshot_stride")) {
        sc.snapshot_stride = integer(j.at("snapshot_stride"), "output.snapshot_stride");
        if (sc.snapshot_stride < 0)
            bad("output.snapshot_stride", "must be non-negative");
    }
    if (j.contains("certificates")) {
        const json& c = j.at("certificates");
        if (!c.is_array())
            bad("output.certificates", "expected a list of names");
        sc.certificates.clear();
        for (std::size_t i = 0; i < c.size(); ++i) {
            std::string f = "output.certificates[" + std::to_string(i) + "]";
            if (!c[i].is_string())
                bad(f, "expected a string");
            std::string name = c[i].get<std::string>();
            const auto& all = certificate_names();
            if (std::find(all.begin(), all.end(), name) == all.end())
                bad(f, "unknown certificate \"" + name + "\"");
            sc.certificates.push_back(name);
        }
    }
    if (j.contains("jump_threshold_cells")) {
        sc.jump_threshold_cells = number(j.at("jump_threshold_cells"), "output.jump_threshold_cells");
        if (!(sc.jump_threshold_cells > 0.0))
            bad("output.jump_threshold_cells", "must be positive");
    }
    if (j.contains("expect_jumps")) {
        int e = integer(j.at("expect_jumps"), "output.expect_jumps");
        if (e < 0)
            bad("output.expect_jumps", "must be non-negative");
        sc.expect_jumps = e;
    }
    if (j.contains("radial_compare"))
        sc.radial_compare = boolean(j.at("radial_compare"), "output.radial_compare");
    if (j.contains("tolerances")) {
        const json& t = j.at("tolerances");
        only_keys(t, "output.tolerances",
                  {"stability", "dissipation_inequality", "energy_balance", "gronwall",
                   "dynamic_slope", "dynamic_slope_fraction"});
        for (auto it = t.begin(); it != t.end(); ++it) {
            double v = number(it.value(), "output.tolerances." + it.key());
            if (!(v >= 0.0))
                bad("output.tolerances." + it.key(), "must be non-negative");
            sc.tolerances[it.key()] = v;
        }
    }
}

double tolerance(const Scenario& sc, const char* key, double def)
{
    auto it = sc.tolerances.find(key);
    return it == sc.tolerances.end() ? def : it->second;
}

double segment_distance(const Segment& s, double x, double y)
{
    double dx = s.bx - s.ax, dy = s.by - s.ay;
    double L2 = dx * dx + dy * dy;
    double t = L2 > 0.0 ? std::clamp(((x - s.ax) * dx + (y - s.ay) * dy) / L2, 0.0, 1.0) : 0.0;
    return std::hypot(x - s.ax - t * dx, y - s.ay - t * dy);
}

} // namespace

const std::vector<std::string>& certificate_names()
{
    static const std::vector<std::string> names{
        "stability", "dissipation_inequality", "energy_balance", "gronwall",
        "dynamic_slope", "regularity", "jumps", "radial"};
    return names;
}

Scenario parse_scenario(const std::string& text, const std::string& base_dir)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    only_keys(j, "", {"version", "name", "domain", "params", "schedule", "initial", "stepper", "output"});
    int version = integer(need(j, "", "version"), "version");
    if (version != 1)
        bad("version", "unsupported version " + std::to_string(version));

    Scenario sc;
    sc.base_dir = base_dir;
    const json& name = need(j, "", "name");
    if (!name.is_string() || name.get<std::string>().empty())
        bad("name", "expected a non-empty string");
    sc.name = name.get<std::string>();

    parse_domain(need(j, "", "domain"), sc);

    const json& p = need(j, "", "params");
    only_keys(p, "params", {"mu_plus", "mu_minus"});
    sc.params.mu_plus = number(need(p, "params", "mu_plus"), "params.mu_plus");
    sc.params.mu_minus = number(need(p, "params", "mu_minus"), "params.mu_minus");
    try {
        sc.params.validate();
    } catch (const Error& e) {
        bad("params", e.what());
    }

    parse_schedule(need(j, "", "schedule"), sc);
    parse_initial(need(j, "", "initial"), sc);
    if (j.contains("stepper"))
        parse_stepper(j.at("stepper"), sc);

    sc.out_dir = "out/" + sc.name;
    sc.certificates = {"stability", "dissipation_inequality", "energy_balance", "gronwall",
                       "dynamic_slope", "regularity", "jumps"};
    if (j.contains("output"))
        parse_output(j.at("output"), sc);
    if (sc.radial_compare && std::find(sc.certificates.begin(), sc.certificates.end(), "radial") ==
                                 sc.certificates.end())
        sc.certificates.push_back("radial");
    return sc;
}

Scenario load_scenario(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError(path + ": cannot open");
    std::stringstream ss;
    ss << in.rdbuf();
    fs::path dir = fs::path(path).parent_path();
    return parse_scenario(ss.str(), dir.empty() ? "." : dir.string());
}

Domain Scenario::domain() const
{
    if (dim == 1)
        return Domain::halfline(nx, h);
    if (segments.empty())
        return Domain::box_with_disks(nx, ny, h, disks);
    // Same h/2 shrink as box_with_disks.
    std::vector<bool> obstacle(static_cast<std::size_t>(nx) * ny, false);
    double x0 = -0.5 * (nx - 1) * h, y0 = -0.5 * (ny - 1) * h;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            double x = x0 + i * h, y = y0 + j * h;
            bool in = false;
            for (const auto& dk : disks)
                in = in || std::hypot(x - dk.cx, y - dk.cy) <= dk.radius - 0.5 * h;
            for (const auto& s : segments)
                in = in || segment_distance(s, x, y) <= s.radius - 0.5 * h;
            obstacle[static_cast<std::size_t>(j) * nx + i] = in;
        }
    }
    return Domain::from_obstacle(2, nx, ny, h, x0, y0, obstacle);
}

Mask Scenario::initial_mask(const Domain& d) const
{
    try {
        switch (init) {
        case Init::Settle:
            return Mask::inner_boundary(d);
        case Init::MaskFile: {
            fs::path p(mask_file);
            if (p.is_relative())
                p = fs::path(base_dir) / p;
            return read_mask_pgm(p.string(), d);
        }
        case Init::Radius:
        case Init::Lambda:
            break;
        }
        double F0 = schedule.F.front();
        if (dim == 1) {
            // Boundary position R: u = F (1 - x/R), slope F/R.
            double R = init == Init::Radius ? init_value : F0 / init_value;
            return Mask::rasterize(d, [R](double x, double) { return x < R; });
        }
        std::vector<Disk> wet;
        for (const auto& dk : disks) {
            double R = init_value;
            if (init == Init::Lambda)
                R = dk.radius * zeta(F0 / (init_value * dk.radius));
            wet.push_back({dk.cx, dk.cy, R});
        }
        if (!segments.empty()) {
            if (init == Init::Lambda)
                throw ConfigError("initial.lambda: needs disk obstacles only");
            double R = init_value;
            auto segs = segments;
            auto dks = disks;
            return Mask::rasterize(d, [&](double x, double y) {
                for (const auto& s : segs)
                    if (segment_distance(s, x, y) < R)
                        return true;
                for (const auto& dk : dks)
                    if (std::hypot(x - dk.cx, y - dk.cy) < R)
                        return true;
                return false;
            });
        }
        return Mask::disks(d, wet);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(std::string("initial: ") + e.what());
    }
}

bool Scenario::is_radial() const
{
    return dim == 2 && segments.empty() && disks.size() == 1 && disks[0].cx == 0.0 &&
           disks[0].cy == 0.0 && disks[0].radius == 1.0;
}

RadialComparison compare_radial(const std::vector<std::array<double, 3>>& rows, double h,
                                const HysteresisParams& p)
{
    RadialComparison c;
    if (rows.empty())
        return c;
    Schedule s;
    for (const auto& r : rows) {
        s.times.push_back(r[0]);
        s.F.push_back(r[1]);
    }
    s.delta = 0.0;
    auto R = [](double area) { return std::sqrt(area / M_PI + 1.0); };
    auto branch = radial_evolve(s, R(rows[0][2]), p);
    double sum = 0.0;
    int moving = 0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        RadialRow row;
        row.t = rows[k][0];
        row.F = rows[k][1];
        row.measured = R(rows[k][2]);
        row.branch = branch[k].state.R;
        row.regime = branch[k].regime;
        row.error = std::abs(row.measured - row.branch);
        row.allowed = std::max(2.0 * h, 0.03 * row.branch);
        row.moved = k > 0 && rows[k][2] != rows[k - 1][2];
        if (k > 0 && row.regime == Regime::Pinned && row.moved)
            ++c.pinned_moves;
        if (row.regime != Regime::Pinned) {
            c.max_error = std::max(c.max_error, row.error);
            c.worst_ratio = std::max(c.worst_ratio, row.error / row.allowed);
            sum += row.error;
            ++moving;
        }
        c.rows.push_back(row);
    }
    c.mean_error = moving ? sum / moving : 0.0;
    c.pass = c.worst_ratio <= 1.0 && c.pinned_moves == 0;
    return c;
}

RadialComparison compare_radial(const Trace& tr)
{
    std::vector<std::array<double, 3>> rows;
    for (const auto& r : tr.records)
        rows.push_back({r.t, r.F, r.energy.volume});
    return compare_radial(rows, tr.domain.h(), tr.params);
}

std::vector<std::array<double, 3>> read_trace_areas(const std::string& csv_path)
{
    std::ifstream in(csv_path);
    if (!in)
        throw Error("cannot read " + csv_path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("t,F,area", 0) != 0)
        throw Error(csv_path + ": expected a trace CSV with header t,F,area,...");
    std::vector<std::array<double, 3>> rows;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::array<double, 3> r{};
        std::stringstream ss(line);
        std::string cell;
        for (int i = 0; i < 3; ++i) {
            if (!std::getline(ss, cell, ','))
                throw Error(csv_path + ": short row");
            r[i] = std::stod(cell);
        }
        rows.push_back(r);
    }
    return rows;
}

void write_radial_comparison_csv(const std::string& path, const RadialComparison& c)
{
    std::ofstream f(path);
    if (!f)
        throw Error("cannot write " + path);
    f << "t,F,R_measured,R_branch,regime,error,allowed\n" << std::setprecision(12);
    for (const auto& r : c.rows)
        f << r.t << ',' << r.F << ',' << r.measured << ',' << r.branch << ',' << regime_name(r.regime)
          << ',' << r.error << ',' << r.allowed << '\n';
}

namespace {

Certificate jump_certificate(const Scenario& sc, const Trace& tr, const std::vector<JumpRecord>& jumps)
{
    Certificate c;
    c.name = "jumps";
    c.tolerance = 0.0;
    c.series.assign(tr.records.size(), 0.0);
    int unstable = 0, incomparable = 0;
    StabilityOptions so;
    so.tol_s = tolerance(sc, "stability", 0.15);
    for (const auto& j : jumps) {
        c.series[j.index] = 1.0;
        so.first = j.index;
        so.last = j.index + 1;
        if (!check_stability(tr, so).pass)
            ++unstable;
        for (const auto& pc : j.per_component_ordering)
            if (pc.second == Relation::Incomparable)
                ++incomparable;
    }
    int n = static_cast<int>(jumps.size());
    int miss = sc.expect_jumps ? std::abs(n - *sc.expect_jumps) : 0;
    c.worst_residual = miss + unstable + incomparable;
    c.pass = c.worst_residual == 0;
    c.vacuous = jumps.empty();
    c.stats["count"] = n;
    if (sc.expect_jumps)
        c.stats["expected"] = *sc.expect_jumps;
    c.stats["unstable_right_states"] = unstable;
    c.stats["incomparable_components"] = incomparable;
    return c;
}

void write_jumps_json(const std::string& path, const Domain& d, const std::vector<JumpRecord>& jumps)
{
    json doc = json::array();
    for (const auto& j : jumps) {
        json e;
        e["t"] = j.t;
        e["index"] = j.index;
        e["left_area"] = measure(j.left_mask, d);
        e["right_area"] = measure(j.right_mask, d);
        e["cells_added"] = count_minus(j.right_mask, j.left_mask);
        e["cells_removed"] = count_minus(j.left_mask, j.right_mask);
        e["reproduced"] = j.reproduced;
        e["fixed_point"] = j.fixed_point;
        json comps = json::array();
        for (const auto& pc : j.per_component_ordering)
            comps.push_back({{"cells", pc.first.count()}, {"relation", relation_name(pc.second)}});
        e["components"] = comps;
        doc.push_back(e);
    }
    std::ofstream f(path);
    if (!f)
        throw Error("cannot write " + path);
    f << doc.dump(2) << '\n';
}

std::string summary(const Certificate& c)
{
    std::ostringstream s;
    s << (c.pass ? "PASS " : "FAIL ") << c.name << " worst=" << std::setprecision(4)
      << c.worst_residual << " tol=" << c.tolerance;
    if (c.vacuous)
        s << " (vacuous)";
    return s.str();
}

} // namespace

ScenarioReport execute_scenario(const Scenario& sc, bool quiet)
{
    ScenarioReport rep;
    Domain d = sc.domain();
    Mask init = sc.initial_mask(d);

    auto t0 = std::chrono::steady_clock::now();
    rep.trace = run(sc.schedule, init, d, sc.params, sc.run);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const Trace& tr = rep.trace;
    if (!quiet) {
        std::ostringstream s;
        s << sc.name << ": " << tr.records.size() << " records in " << std::fixed
          << std::setprecision(1) << secs << " s" << (tr.settled ? " (initial mask settled)" : "");
        say(s.str());
    }

    fs::path out(sc.out_dir);
    fs::create_directories(out);
    write_trace_csv((out / "trace.csv").string(), tr);
    if (sc.snapshot_stride > 0) {
        fs::create_directories(out / "snapshots");
        int n = static_cast<int>(tr.records.size());
        for (int k = 0; k < n; ++k) {
            if (k % sc.snapshot_stride != 0 && k != n - 1)
                continue;
            char name[32];
            std::snprintf(name, sizeof name, "mask_%05d.pgm", k);
            write_mask_pgm((out / "snapshots" / name).string(), tr.records[k].mask, d, tr.records[k].t,
                           tr.records[k].F);
        }
    }

    for (const auto& name : sc.certificates) {
        if (name == "stability") {
            StabilityOptions o;
            o.tol_s = tolerance(sc, "stability", 0.15);
            rep.certificates.push_back(check_stability(tr, o));
        } else if (name == "dissipation_inequality") {
            rep.certificates.push_back(
                check_dissipation_inequality(tr, tolerance(sc, "dissipation_inequality", 1e-6)));
        } else if (name == "energy_balance") {
            rep.certificates.push_back(check_energy_balance(tr, tolerance(sc, "energy_balance", 0.05)));
        } else if (name == "gronwall") {
            rep.certificates.push_back(check_gronwall(tr, tolerance(sc, "gronwall", 1e-6)));
        } else if (name == "dynamic_slope") {
            DynamicSlopeOptions o;
            o.tol_d = tolerance(sc, "dynamic_slope", 0.15);
            o.fraction = tolerance(sc, "dynamic_slope_fraction", 0.9);
            rep.certificates.push_back(check_dynamic_slope(tr, o));
        } else if (name == "regularity") {
            rep.certificates.push_back(regularity_report(tr));
        } else if (name == "jumps") {
            double cells = sc.jump_threshold_cells > 0.0 ? sc.jump_threshold_cells : 10.0;
            rep.jumps = jump_report(tr, cells * d.cell_measure(), sc.run.step);
            write_jumps_json((out / "jumps.json").string(), d, rep.jumps);
            rep.certificates.push_back(jump_certificate(sc, tr, rep.jumps));
        } else if (name == "radial") {
            if (!sc.is_radial())
                say("warning: " + sc.name + " is not the unit-disk radial geometry; comparison is indicative only");
            RadialComparison rc = compare_radial(tr);
            write_radial_comparison_csv((out / "radial.csv").string(), rc);
            Certificate c;
            c.name = "radial";
            c.tolerance = 1.0;
            c.worst_residual = rc.pinned_moves > 0 ? std::max(rc.worst_ratio, 1.0 + rc.pinned_moves)
                                                   : rc.worst_ratio;
            c.pass = rc.pass;
            c.stats["max_error"] = rc.max_error;
            c.stats["mean_error"] = rc.mean_error;
            c.stats["worst_ratio"] = rc.worst_ratio;
            c.stats["pinned_moves"] = rc.pinned_moves;
            for (const auto& r : rc.rows)
                c.series.push_back(r.allowed > 0.0 ? r.error / r.allowed : 0.0);
            rep.certificates.push_back(c);
        }
    }
    fs::create_directories(out / "series");
    write_certificates_json((out / "certificates.json").string(), rep.certificates,
                            (out / "series").string());

    rep.pass = true;
    for (const auto& c : rep.certificates) {
        rep.pass = rep.pass && c.pass;
        say(sc.name + ": " + summary(c));
    }
    return rep;
}

int run_scenario(const std::string& config_path, const std::optional<std::string>& out_dir,
                 std::optional<int> snapshot_stride,
                 const std::optional<std::vector<std::string>>& verify, bool quiet)
{
    Scenario sc;
    try {
        sc = load_scenario(config_path);
        if (out_dir)
            sc.out_dir = *out_dir;
        if (snapshot_stride) {
            if (*snapshot_stride < 0)
                throw ConfigError("--snapshots: must be non-negative");
            sc.snapshot_stride = *snapshot_stride;
        }
        if (verify) {
            const auto& all = certificate_names();
            for (const auto& v : *verify)
                if (std::find(all.begin(), all.end(), v) == all.end())
                    throw ConfigError("--verify: unknown certificate \"" + v + "\"");
            sc.certificates = *verify;
        }
        Domain d = sc.domain();
        sc.initial_mask(d);
    } catch (const ConfigError& e) {
        say(config_path + ": config error: " + e.what());
        return 2;
    } catch (const Error& e) {
        say(config_path + ": config error: " + e.what());
        return 2;
    }
    try {
        ScenarioReport rep = execute_scenario(sc, quiet);
        return rep.pass ? 0 : 1;
    } catch (const StepError& e) {
        say(sc.name + ": runtime error at step " + std::to_string(e.index) + ": " + e.what());
    } catch (const std::exception& e) {
        say(sc.name + ": runtime error: " + e.what());
    }
    return 3;
}

} // namespace droplet
