// opmult: norms, kernel application, compactness profiles and the Saar demo.
//
// Exit codes: 0 success, 1 input error, 2 inconclusive numerical verdict,
// 3 solver failure.

#include <chrono>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "opmult/compactness.hpp"
#include "opmult/io.hpp"
#include "opmult/norms.hpp"
#include "opmult/saar.hpp"
#include "opmult/schur.hpp"

using namespace opmult;

namespace {

constexpr int kOk = 0, kInputError = 1, kInconclusive = 2, kSolverFailure = 3;

struct Common {
  double tol = 1e-6;
  std::uint64_t seed = 0;
  std::string emit;
};

NormOptions options(const Common& c) {
  NormOptions o;
  o.seed = c.seed;
  return o;
}

void bracket_row(Report& r, const NormBracket& br) {
  r.header = {"lower", "upper", "lower_method", "upper_method", "tolerance"};
  r.add_row({fmt12(br.lower), fmt12(br.upper), br.lower_method, br.upper_method, fmt12(br.tolerance)});
  r.summary["lower"] = num12(br.lower);
  r.summary["upper"] = num12(br.upper);
  r.summary["lower_method"] = br.lower_method;
  r.summary["upper_method"] = br.upper_method;
  r.summary["tolerance"] = num12(br.tolerance);
}

int cmd_norm(const std::string& input, const Common& c) {
  const auto mf = load_multiplier(input);
  const auto t0 = std::chrono::steady_clock::now();
  Report r;
  r.summary["command"] = "norm";
  int code = kOk;
  NormBracket br;
  try {
    if (mf.kind == MultiplierFile::Kind::Schur) {
      require(mf.schur.rank() == 2, ErrorKind::InvalidArgument, "norm of a Schur file needs exactly 2 dims");
      br = schur_norm(mf.schur, c.tol, options(c)).bracket;
      r.summary["kind"] = "schur";
    } else {
      br = multiplier_norm(mf.terms, c.tol, options(c));
      r.summary["kind"] = "tensor_sum";
    }
    r.summary["status"] = br.closed() ? "Optimal" : "Inconclusive";
    if (!br.closed()) code = kInconclusive;
  } catch (const SolverFailure& e) {
    br = e.bracket();
    r.summary["status"] = "SolverFailed";
    r.summary["message"] = e.what();
    code = kSolverFailure;
  }
  bracket_row(r, br);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cerr << "wall time " << fmt12(secs) << " s\n";
  emit_report(r, c.emit);
  return code;
}

int cmd_apply(const std::string& input, const std::string& kernels, const Common& c) {
  const auto mf = load_multiplier(input);
  const auto ts = parse_kernels(parse_json_text(read_file(kernels), kernels));
  CMatrix out;
  if (mf.kind == MultiplierFile::Kind::Schur) {
    check_kernel_chain(tensor_dims(mf.schur), ts);
    out = schur_apply_nd(mf.schur, ts);
  } else {
    out = phi_apply(mf.terms, ts);
  }
  Report r;
  r.header = {"row", "col", "re", "im"};
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      r.add_row({std::to_string(i), std::to_string(j), fmt12(out(i, j).real()), fmt12(out(i, j).imag())});
  r.summary["command"] = "apply";
  r.summary["rows"] = out.rows();
  r.summary["cols"] = out.cols();
  r.summary["op_norm"] = num12(op_norm(out));
  r.summary["hs_norm"] = num12(hs_norm(out));
  emit_report(r, c.emit);
  return kOk;
}

std::vector<Eigen::Index> parse_schedule(const std::string& text) {
  std::vector<Eigen::Index> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      require(used == item.size() && v >= 0, ErrorKind::ParseError, "");
      out.push_back(Eigen::Index(v));
    } catch (const std::exception&) {
      throw Error(ErrorKind::ParseError, "--schedule: bad cutoff \"" + item + "\"");
    }
  }
  return out;
}

int cmd_compact(const std::string& input, const std::string& schedule_text, const Common& c) {
  const auto mf = load_multiplier(input);
  const Dims d = mf.dims();
  std::vector<Eigen::Index> cuts;
  if (schedule_text.empty()) {
    for (Eigen::Index k = 1; k <= std::min(d.front(), d.back()); ++k) cuts.push_back(k);
  } else {
    cuts = parse_schedule(schedule_text);
  }
  const TruncationSchedule schedule(cuts);
  CompactnessReport rep;
  int code = kOk;
  try {
    rep = mf.kind == MultiplierFile::Kind::Schur ? tail_norm_profile(mf.schur, schedule, c.tol, options(c))
                                                 : tail_norm_profile(mf.terms, schedule, c.tol, options(c));
  } catch (const SolverFailure& e) {
    std::cerr << e.what() << "\n";
    return kSolverFailure;
  }
  Report r;
  r.header = {"cutoff", "tail_lower", "tail_upper"};
  json tails = json::array();
  for (std::size_t i = 0; i < rep.tails.size(); ++i) {
    r.add_row({std::to_string(cuts[i]), fmt12(rep.tails[i].lower), fmt12(rep.tails[i].upper)});
    tails.push_back(json{{"cutoff", cuts[i]}, {"lower", num12(rep.tails[i].lower)}, {"upper", num12(rep.tails[i].upper)}});
  }
  r.summary["command"] = "compact-test";
  r.summary["verdict"] = to_string(rep.verdict);
  r.summary["decay_exponent"] = rep.decay_exponent ? num12(*rep.decay_exponent) : json(nullptr);
  r.summary["tolerance"] = num12(c.tol);
  r.summary["tails"] = tails;
  if (rep.verdict == Verdict::Inconclusive) code = kInconclusive;
  emit_report(r, c.emit);
  return code;
}

int cmd_saar(int max_block, const Common& c) {
  require(max_block >= 2 && max_block <= 12, ErrorKind::InvalidArgument,
          "--max-block must lie in [2, 12], got " + std::to_string(max_block));
  const auto s = build_saar(max_block, std::max(c.tol, 1e-9), options(c));
  Report r;
  r.header = {"section", "k", "level1_norm", "cb_lower", "cb_upper", "obstruction_bound", "tail_norm"};
  json blocks = json::array();
  bool all_closed = true;
  for (const auto& b : s.blocks) {
    const auto cert = saar_obstruction(s, b.k);
    r.add_row({"block", std::to_string(b.k), fmt12(b.level1_norm), fmt12(b.cb.lower), fmt12(b.cb.upper),
               fmt12(cert.bound), ""});
    blocks.push_back(json{{"k", b.k},
                          {"level1_norm", num12(b.level1_norm)},
                          {"cb_lower", num12(b.cb.lower)},
                          {"cb_upper", num12(b.cb.upper)},
                          {"obstruction_bound", num12(cert.bound)}});
    all_closed = all_closed && b.cb.closed();
  }
  json profile = json::array();
  for (const auto& [n, tail] : saar_compactness_profile(s)) {
    r.add_row({"profile", std::to_string(n), "", "", "", "", fmt12(tail)});
    profile.push_back(json{{"n", n}, {"tail_norm", num12(tail)}});
  }
  r.summary["command"] = "saar-demo";
  r.summary["max_block"] = max_block;
  r.summary["blocks"] = blocks;
  r.summary["profile"] = profile;
  r.summary["hs_partial_sum"] = num12(s.hs_partial_sum());
  emit_report(r, c.emit);
  return all_closed ? kOk : kInconclusive;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Operator multiplier norms and compactness diagnostics"};
  app.require_subcommand(1);
  Common common;
  std::string input, kernels, schedule;
  int max_block = 8;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--tol", common.tol, "relative bracket tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--seed", common.seed, "seed for randomized restarts");
    sub->add_option("--emit", common.emit, "CSV output path (JSON summary goes to PATH.json)");
  };

  auto* norm = app.add_subcommand("norm", "certified norm bracket of a multiplier file");
  norm->add_option("input", input, "multiplier JSON file")->required();
  add_common(norm);

  auto* apply = app.add_subcommand("apply", "apply a multiplier to a kernel tuple");
  apply->add_option("input", input, "multiplier JSON file")->required();
  apply->add_option("--kernels", kernels, "kernel JSON file")->required();
  add_common(apply);

  auto* compact = app.add_subcommand("compact-test", "tail-norm profile along a truncation schedule");
  compact->add_option("input", input, "multiplier JSON file")->required();
  compact->add_option("--schedule", schedule, "comma-separated cutoffs r1,r2,...");
  add_common(compact);

  auto* saar = app.add_subcommand("saar-demo", "Saar map block certificates and tail profile");
  saar->add_option("--max-block", max_block, "largest block K (2..12)");
  add_common(saar);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    if (*norm) return cmd_norm(input, common);
    if (*apply) return cmd_apply(input, kernels, common);
    if (*compact) return cmd_compact(input, schedule, common);
    if (*saar) return cmd_saar(max_block, common);
  } catch (const SolverFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSolverFailure;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::SolverFailed ? kSolverFailure : kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}
