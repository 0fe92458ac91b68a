#include "dbpark/harness.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "dbpark/errors.h"
#include "dbpark/geometry.h"

namespace dbpark {
namespace {

// Runs job(i) for i in [0, count) on up to `workers` threads. Each job
// writes only its own slot, so ordering never depends on scheduling.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& job) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) job(i);
    });
  }
  for (auto& th : pool) th.join();
}

std::string g17(double x) { return fmt::format("{:.17g}", x); }

template <typename... Args>
void append(std::string& out, fmt::format_string<Args...> f, Args&&... args) {
  fmt::format_to(std::back_inserter(out), f, std::forward<Args>(args)...);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write {}", path));
  out << content;
  out.close();
  if (!out) throw IoError(fmt::format("error while writing {}", path));
}

std::string file_stem(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
                    c == '_' || c == '.';
    if (!ok) c = '_';
  }
  return out;
}

double max_abs_omega(const Trajectory& traj) {
  double m = 0.0;
  for (const Sample& s : traj.samples) m = std::max(m, std::abs(s.inputs.omega));
  return m;
}

}  // namespace

RunResult run_scenario(const Scenario& scenario) {
  IntegrationOptions opt;
  opt.step = scenario.step;
  opt.cutoff_rho = scenario.cutoff_rho;
  opt.horizon = resolved_horizon(scenario);
  opt.substeps = scenario.substeps;
  RunResult result;
  result.scenario = scenario;
  result.trajectory = integrate(scenario.initial, scenario.law, opt);
  result.report = check_trajectory(*result.trajectory, scenario.law);
  return result;
}

std::vector<RunResult> run_set(const ScenarioSet& set, std::size_t workers) {
  std::vector<RunResult> results(set.runs.size());
  parallel_for(set.runs.size(), workers, [&](std::size_t i) {
    try {
      results[i] = run_scenario(set.runs[i]);
    } catch (const GuardTripped& e) {
      results[i].scenario = set.runs[i];
      results[i].trajectory = e.partial();
      results[i].error = e.what();
    } catch (const std::exception& e) {
      results[i].scenario = set.runs[i];
      results[i].error = e.what();
    }
  });
  return results;
}

double SweepResult::pass_fraction() const {
  std::size_t evaluated = 0, passed = 0;
  for (const SweepRow& row : rows) {
    if (row.status == SweepRow::Status::kSkipped) continue;
    ++evaluated;
    if (row.passed) ++passed;
  }
  return evaluated == 0 ? 1.0 : static_cast<double>(passed) / evaluated;
}

SweepResult run_sweep(const SweepSpec& spec, std::size_t workers) {
  SweepResult result;
  result.rows.resize(spec.point_count());
  parallel_for(result.rows.size(), workers, [&](std::size_t i) {
    SweepRow& row = result.rows[i];
    row.index = i;
    row.values = spec.point_values(i);
    Scenario s = spec.base;
    s.name = fmt::format("point_{}", i);
    try {
      if (s.initial_pose) {
        s.initial = cart_to_polar(*s.initial_pose);
        s.initial_pose.reset();
      }
      for (std::size_t a = 0; a < spec.grid.size(); ++a) {
        const double x = row.values[a];
        switch (spec.grid[a].first) {
          case SweepAxis::kDelta0:
            s.initial.delta = x;
            break;
          case SweepAxis::kGamma0:
            s.initial.gamma = x;
            break;
          case SweepAxis::kC1:
            s.law.gains.c1 = x;
            s.c1_auto = false;
            break;
          case SweepAxis::kC2:
            s.law.gains.c2 = x;
            break;
          case SweepAxis::kV:
            s.law.v = x;
            s.omega_limit.reset();
            break;
        }
      }
      finalize(s);
    } catch (const std::exception& e) {
      row.status = SweepRow::Status::kSkipped;
      row.reason = e.what();
      return;
    }
    row.scenario = s;
    try {
      const RunResult run = run_scenario(s);
      row.passed = run.passed();
      row.parking_time = run.trajectory->cutoff_time;
      row.max_abs_omega = max_abs_omega(*run.trajectory);
      for (const CheckResult& c : run.report->checks) {
        if (!c.passed) row.failed_checks.push_back(c.name);
      }
    } catch (const std::exception& e) {
      row.status = SweepRow::Status::kError;
      row.reason = e.what();
    }
  });
  return result;
}

std::string sweep_table(const SweepSpec& spec, const SweepResult& result) {
  std::string out = "index";
  for (const auto& [axis, values] : spec.grid) {
    out += ',';
    out += to_string(axis);
  }
  out += ",status,passed,parking_time,max_abs_omega,failed_checks,reason\n";
  for (const SweepRow& row : result.rows) {
    out += std::to_string(row.index);
    for (double v : row.values) out += ',' + g17(v);
    const char* status = row.status == SweepRow::Status::kOk        ? "ok"
                         : row.status == SweepRow::Status::kSkipped ? "skipped"
                                                                    : "error";
    std::string reason = row.reason;
    std::replace(reason.begin(), reason.end(), ',', ';');
    std::replace(reason.begin(), reason.end(), '\n', ' ');
    out += fmt::format(",{},{},{},{},{},{}\n", status,
                       row.passed ? "PASS" : "FAIL",
                       row.parking_time ? g17(*row.parking_time) : "",
                       g17(row.max_abs_omega),
                       fmt::join(row.failed_checks, ";"), reason);
  }
  return out;
}

std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "t,rho,delta,gamma,v,omega,x,y,theta\n";
  out.reserve(traj.samples.size() * 200);
  for (const Sample& s : traj.samples) {
    const CartesianPose p = polar_to_cart(s.state);
    fmt::format_to(std::back_inserter(out),
                   "{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},"
                   "{:.17g},{:.17g}\n",
                   s.t, s.state.rho, s.state.delta, s.state.gamma,
                   s.inputs.v, s.inputs.omega, p.x, p.y, p.theta);
  }
  return out;
}

void emit_csv(const Trajectory& traj, const std::string& path) {
  write_file(path, trajectory_csv(traj));
}

Trajectory trajectory_from_csv(const std::string& text, const ControlLaw& law,
                               double cutoff_rho) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,rho,delta,gamma,v,omega,x,y,theta") {
    throw ParseError(fmt::format("unexpected CSV header '{}'", line));
  }
  Trajectory traj;
  traj.law = law;
  traj.cutoff_rho = cutoff_rho;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    double f[9];
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (int k = 0; k < 9; ++k) {
      auto [ptr, ec] = std::from_chars(p, end, f[k]);
      const bool last = k == 8;
      if (ec != std::errc() || (last ? ptr != end : (ptr == end || *ptr != ','))) {
        throw ParseError(fmt::format("CSV line {}: malformed row", line_no));
      }
      p = last ? ptr : ptr + 1;
    }
    traj.samples.push_back({f[0], {f[1], f[2], f[3]}, {f[4], f[5]}});
  }
  if (traj.samples.empty()) throw ParseError("CSV has no samples");
  if (traj.samples.size() > 1) {
    traj.step = traj.samples[1].t - traj.samples[0].t;
  }
  const Sample& last = traj.samples.back();
  traj.horizon = last.t;
  if (last.state.rho <= cutoff_rho && last.inputs.v == 0.0 &&
      last.inputs.omega == 0.0) {
    traj.cutoff_time = last.t;
    traj.terminated = Termination::kCutoffReached;
  } else {
    traj.terminated = Termination::kHorizon;
  }
  return traj;
}

// ---------------------------------------------------------------- plots

const char* to_string(PlotKind kind) {
  switch (kind) {
    case PlotKind::kXyTrack:
      return "xy_track";
    case PlotKind::kOmegaVsT:
      return "omega_vs_t";
    case PlotKind::kAnglesVsT:
      return "angles_vs_t";
    case PlotKind::kVVsT:
      return "v_vs_t";
  }
  return "?";
}

namespace {

constexpr double kWidth = 640, kHeight = 480;
constexpr double kLeft = 70, kRight = 20, kTop = 30, kBottom = 50;
constexpr std::size_t kMaxPoints = 4000;
constexpr const char* kPalette[] = {"#d62728", "#1f77b4", "#2ca02c",
                                    "#9467bd", "#ff7f0e", "#8c564b"};

struct Curve {
  std::vector<std::pair<double, double>> pts;
  std::string color;
  bool dashed = false;
};

struct Range {
  double lo = INFINITY, hi = -INFINITY;
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (!(lo <= hi)) lo = -1, hi = 1;
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
      const double d = std::max(0.5 * std::abs(hi), 0.5);
      lo -= d, hi += d;
    }
    const double m = 0.05 * (hi - lo);
    lo -= m, hi += m;
  }
};

// 1-2-5 tick spacing giving roughly `target` intervals.
std::vector<double> ticks(const Range& r, int target = 6) {
  const double raw = (r.hi - r.lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> out;
  for (double v = std::ceil(r.lo / step) * step; v <= r.hi + 1e-9 * step;
       v += step) {
    out.push_back(std::abs(v) < 1e-9 * step ? 0.0 : v);
  }
  return out;
}

std::vector<std::size_t> decimate(std::size_t n) {
  std::vector<std::size_t> idx;
  if (n == 0) return idx;
  const std::size_t stride = (n + kMaxPoints - 2) / (kMaxPoints - 1);
  for (std::size_t i = 0; i < n; i += std::max<std::size_t>(stride, 1)) {
    idx.push_back(i);
  }
  if (idx.back() != n - 1) idx.push_back(n - 1);
  return idx;
}

}  // namespace

std::string render_svg(const std::vector<PlotSeries>& series, PlotKind kind) {
  if (series.empty()) throw InvalidArgument("render_svg needs a trajectory");
  std::vector<Curve> curves;
  std::vector<std::pair<std::string, std::string>> legend;
  std::vector<double> cutoffs;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const Trajectory* traj = series[k].trajectory;
    if (!traj || traj->samples.empty()) {
      throw InvalidArgument("render_svg: empty trajectory");
    }
    const std::string color = kPalette[k % std::size(kPalette)];
    legend.emplace_back(series[k].label, color);
    if (kind != PlotKind::kXyTrack && traj->cutoff_time) {
      cutoffs.push_back(*traj->cutoff_time);
    }
    const auto idx = decimate(traj->samples.size());
    Curve main{{}, color, false}, second{{}, color, true};
    for (std::size_t i : idx) {
      const Sample& s = traj->samples[i];
      switch (kind) {
        case PlotKind::kXyTrack: {
          const CartesianPose p = polar_to_cart(s.state);
          main.pts.emplace_back(p.x, p.y);
          break;
        }
        case PlotKind::kOmegaVsT:
          main.pts.emplace_back(s.t, s.inputs.omega);
          break;
        case PlotKind::kAnglesVsT:
          main.pts.emplace_back(s.t, s.state.delta);
          second.pts.emplace_back(s.t, s.state.gamma);
          break;
        case PlotKind::kVVsT:
          main.pts.emplace_back(s.t, s.inputs.v);
          break;
      }
    }
    curves.push_back(std::move(main));
    if (!second.pts.empty()) curves.push_back(std::move(second));
  }

  Range rx, ry;
  for (const Curve& c : curves) {
    for (const auto& [x, y] : c.pts) rx.add(x), ry.add(y);
  }
  if (kind == PlotKind::kXyTrack) rx.add(0.0), ry.add(0.0);
  for (double tc : cutoffs) rx.add(tc);
  rx.pad();
  ry.pad();
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  double sx = pw / (rx.hi - rx.lo), sy = ph / (ry.hi - ry.lo);
  if (kind == PlotKind::kXyTrack) {
    // Equal aspect ratio so the track geometry is not distorted.
    const double s = std::min(sx, sy);
    const double cx = 0.5 * (rx.lo + rx.hi), cy = 0.5 * (ry.lo + ry.hi);
    sx = sy = s;
    rx.lo = cx - 0.5 * pw / s, rx.hi = cx + 0.5 * pw / s;
    ry.lo = cy - 0.5 * ph / s, ry.hi = cy + 0.5 * ph / s;
  }
  auto px = [&](double x) { return kLeft + (x - rx.lo) * sx; };
  auto py = [&](double y) { return kTop + (ry.hi - y) * sy; };

  const char* xlabel = kind == PlotKind::kXyTrack ? "x" : "t";
  const char* ylabel = kind == PlotKind::kXyTrack    ? "y"
                       : kind == PlotKind::kOmegaVsT ? "omega"
                       : kind == PlotKind::kVVsT     ? "v"
                                                     : "delta (solid), gamma (dashed)";

  std::string out;
  append(out, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
  append(out, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
       "viewBox=\"0 0 {} {}\" data-kind=\"{}\">\n",
       kWidth, kHeight, kWidth, kHeight, to_string(kind));
  append(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
  append(out, "<g class=\"axes\" font-family=\"sans-serif\" font-size=\"11\">\n");
  append(out, "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" "
       "stroke=\"black\"/>\n",
       kLeft, kTop, pw, ph);
  for (double v : ticks(rx)) {
    append(out, "<line x1=\"{0:.2f}\" y1=\"{1}\" x2=\"{0:.2f}\" y2=\"{2}\" "
         "stroke=\"black\"/><text x=\"{0:.2f}\" y=\"{3}\" "
         "text-anchor=\"middle\">{4:.6g}</text>\n",
         px(v), kTop + ph, kTop + ph + 5, kTop + ph + 18, v);
  }
  for (double v : ticks(ry)) {
    append(out, "<line x1=\"{0}\" y1=\"{1:.2f}\" x2=\"{2}\" y2=\"{1:.2f}\" "
         "stroke=\"black\"/><text x=\"{3}\" y=\"{4:.2f}\" "
         "text-anchor=\"end\">{5:.6g}</text>\n",
         kLeft - 5, py(v), kLeft, kLeft - 8, py(v) + 4, v);
  }
  append(out, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
       kLeft + pw / 2, kHeight - 10, xlabel);
  append(out, "<text x=\"15\" y=\"{}\" text-anchor=\"middle\" "
       "transform=\"rotate(-90 15 {})\">{}</text>\n",
       kTop + ph / 2, kTop + ph / 2, ylabel);
  append(out, "</g>\n");

  for (double tc : cutoffs) {
    append(out, "<line class=\"cutoff\" x1=\"{0:.2f}\" y1=\"{1}\" x2=\"{0:.2f}\" "
         "y2=\"{2}\" stroke=\"gray\" stroke-dasharray=\"6 4\"/>\n",
         px(tc), kTop, kTop + ph);
  }
  if (kind == PlotKind::kXyTrack) {
    append(out, "<circle class=\"target\" cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"5\" "
         "fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>\n",
         px(0.0), py(0.0));
  }

  // Data in world coordinates; the group transform maps them to the frame.
  append(out, "<g class=\"data\" transform=\"matrix({:.17g} 0 0 {:.17g} {:.17g} "
       "{:.17g})\" fill=\"none\" stroke-width=\"1.5\">\n",
       sx, -sy, kLeft - rx.lo * sx, kTop + ry.hi * sy);
  for (const Curve& c : curves) {
    if (c.pts.size() == 1) {
      append(out, "<circle class=\"point\" cx=\"{:.9g}\" cy=\"{:.9g}\" r=\"{:.6g}\" "
           "fill=\"{}\"/>\n",
           c.pts[0].first, c.pts[0].second, 4.0 / sx, c.color);
      continue;
    }
    append(out, "<polyline stroke=\"{}\" vector-effect=\"non-scaling-stroke\"{} "
         "points=\"",
         c.color, c.dashed ? " stroke-dasharray=\"5 3\"" : "");
    for (std::size_t i = 0; i < c.pts.size(); ++i) {
      append(out, "{}{:.9g},{:.9g}", i ? " " : "", c.pts[i].first, c.pts[i].second);
    }
    append(out, "\"/>\n");
  }
  append(out, "</g>\n");

  append(out, "<g class=\"legend\" font-family=\"sans-serif\" font-size=\"11\">\n");
  for (std::size_t k = 0; k < legend.size(); ++k) {
    const double y = kTop + 15 + 15 * k;
    append(out, "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{3}\" "
         "stroke-width=\"2\"/><text x=\"{4}\" y=\"{5}\">{6}</text>\n",
         kLeft + pw - 120, y, kLeft + pw - 100, legend[k].second,
         kLeft + pw - 95, y + 4, legend[k].first);
  }
  append(out, "</g>\n</svg>\n");
  return out;
}

void emit_svg(const std::vector<PlotSeries>& series, PlotKind kind,
              const std::string& path) {
  write_file(path, render_svg(series, kind));
}

// -------------------------------------------------------------- reports

std::string serialize_report(const RunResult& run) {
  std::string out;
  const Scenario& s = run.scenario;
  append(out, "run {}\n", s.name);
  append(out, "law {}\n", format_law(s.law));
  append(out, "initial {} {} {}\n", g17(s.initial.rho), g17(s.initial.delta),
       g17(s.initial.gamma));
  if (run.trajectory) {
    const Trajectory& t = *run.trajectory;
    append(out, "samples {}\nstep {}\nsubsteps {}\ntermination {}\n",
         t.samples.size(), g17(t.step), t.substeps, to_string(t.terminated));
    if (t.cutoff_time) append(out, "cutoff_time {}\n", g17(*t.cutoff_time));
  }
  if (!run.error.empty()) append(out, "error {}\n", run.error);
  if (run.report) {
    for (const CheckResult& c : run.report->checks) {
      append(out, "check {} {} {:.9g} {:.9g}{}\n", c.name, c.passed ? "PASS" : "FAIL",
           c.worst_slack, c.worst_time, c.exact ? "" : " shape");
    }
    if (const auto& f = run.report->fitted) {
      append(out, "fitted log_n1={:.9g} beta1={:.9g} log_n2={:.9g} beta2={:.9g} "
           "shape_horizon={:.9g} t1={:.9g} residual_b={:.9g} "
           "residual_omega={:.9g} samples={}\n",
           f->log_n1, f->beta1, f->log_n2, f->beta2, f->shape_horizon, f->t1,
           f->residual_b, f->residual_omega, f->fitted_samples);
    }
  }
  append(out, "overall {}\n", run.passed() ? "PASS" : "FAIL");
  return out;
}

std::string report_document(const std::string& title,
                            const std::vector<RunResult>& runs) {
  std::string text = fmt::format("title {}\n", title);
  bool all = true;
  for (const RunResult& r : runs) {
    text += "\n" + serialize_report(r);
    all &= r.passed();
  }
  text += fmt::format("\nsummary {}\n", all ? "PASS" : "FAIL");
  return text;
}

std::vector<std::string> write_outputs(const std::string& title,
                                       const std::vector<RunResult>& runs,
                                       const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError(fmt::format("cannot create {}: {}", out_dir, ec.message()));
  const std::string stem = file_stem(title);
  std::vector<std::string> written;
  auto path_of = [&](const std::string& name) {
    return (fs::path(out_dir) / name).string();
  };

  std::vector<PlotSeries> plotted;
  bool want_report = false;
  for (const RunResult& r : runs) {
    const unsigned o = r.scenario.outputs;
    want_report |= (o & kOutputReport) != 0;
    if (!r.trajectory) continue;
    if (o & kOutputCsv) {
      const std::string p = path_of(stem + "_" + file_stem(r.scenario.name) + ".csv");
      emit_csv(*r.trajectory, p);
      written.push_back(p);
    }
    if (o & kOutputSvg) plotted.push_back({r.scenario.name, &*r.trajectory});
  }
  if (!plotted.empty()) {
    for (PlotKind kind : {PlotKind::kXyTrack, PlotKind::kOmegaVsT,
                          PlotKind::kAnglesVsT, PlotKind::kVVsT}) {
      const std::string p = path_of(stem + "_" + to_string(kind) + ".svg");
      emit_svg(plotted, kind, p);
      written.push_back(p);
    }
  }
  if (want_report) {
    std::vector<RunResult> reported;
    for (const RunResult& r : runs) {
      if (r.scenario.outputs & kOutputReport) reported.push_back(r);
    }
    const std::string p = path_of(stem + ".report");
    write_file(p, report_document(title, reported));
    written.push_back(p);
  }
  return written;
}

std::vector<std::string> write_sweep_outputs(const SweepSpec& spec,
                                             const SweepResult& result,
                                             const std::string& out_dir) {
  namespace fs = std::filesystem;
  const std::string stem = file_stem(spec.title);
  const fs::path points = fs::path(out_dir) / (stem + "_points");
  std::error_code ec;
  fs::create_directories(points, ec);
  if (ec) throw IoError(fmt::format("cannot create {}: {}", points.string(), ec.message()));
  std::vector<std::string> written;
  const std::string table = (fs::path(out_dir) / (stem + "_sweep.csv")).string();
  write_file(table, sweep_table(spec, result));
  written.push_back(table);
  for (const SweepRow& row : result.rows) {
    if (!row.scenario) continue;
    const std::string p =
        (points / fmt::format("point_{}.scn", row.index)).string();
    write_file(p, serialize_scenario(*row.scenario));
    written.push_back(p);
  }
  return written;
}

}  // namespace dbpark
