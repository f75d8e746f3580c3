#include "stepdelay/potential.hpp"

#include <cmath>

#include "json.hpp"

namespace stepdelay {

using nlohmann::json;

std::string to_string(PotentialKind k) {
  switch (k) {
    case PotentialKind::PureStep: return "pure-step";
    case PotentialKind::SmoothStep: return "smooth-step";
    case PotentialKind::StepPlusBump: return "step-plus-bump";
    case PotentialKind::Custom: return "custom";
  }
  return "?";
}

PotentialKind potential_kind_from_string(const std::string& s) {
  if (s == "pure-step") return PotentialKind::PureStep;
  if (s == "smooth-step") return PotentialKind::SmoothStep;
  if (s == "step-plus-bump") return PotentialKind::StepPlusBump;
  if (s == "custom") return PotentialKind::Custom;
  throw ConfigError("unknown potential kind: " + s);
}

double PolyPiece::eval(double x) const {
  const double u = x - x_begin;
  double acc = 0.0;
  for (size_t k = coeffs.size(); k-- > 0;) acc = acc * u + coeffs[k];
  return acc;
}

double Potential::operator()(double x) const {
  switch (kind) {
    case PotentialKind::PureStep:
      return x < 0.0 ? v_left : v_right;
    case PotentialKind::SmoothStep:
      return v_left + (v_right - v_left) * 0.5 * (1.0 + std::tanh(x / width));
    case PotentialKind::StepPlusBump: {
      const double step = v_left + (v_right - v_left) * 0.5 * (1.0 + std::tanh(x / width));
      const double u = (x - bump_center) / bump_width;
      return step + bump_height * std::exp(-u * u);
    }
    case PotentialKind::Custom: {
      if (pieces.empty() || x < pieces.front().x_begin) return v_left;
      if (x >= pieces.back().x_end) return v_right;
      for (const auto& pc : pieces)
        if (x >= pc.x_begin && x < pc.x_end) return pc.eval(x);
      return v_right;
    }
  }
  return 0.0;
}

std::vector<double> Potential::breakpoints() const {
  std::vector<double> bp;
  if (kind == PotentialKind::PureStep) bp.push_back(0.0);
  if (kind == PotentialKind::Custom) {
    for (const auto& pc : pieces) bp.push_back(pc.x_begin);
    if (!pieces.empty()) bp.push_back(pieces.back().x_end);
  }
  return bp;
}

double Potential::tail_integral_right(double x) const {
  const double dv = v_right - v_left;
  switch (kind) {
    case PotentialKind::PureStep:
      return x >= 0.0 ? 0.0 : std::abs(dv) * (-x);
    case PotentialKind::SmoothStep:
      // |V - v_r| = dv (1 - tanh(x/w))/2 <= dv e^{-2x/w} for x >= 0
      return std::abs(dv) * 0.5 * width * std::exp(-2.0 * std::max(x, 0.0) / width);
    case PotentialKind::StepPlusBump: {
      const double step_tail =
          std::abs(dv) * 0.5 * width * std::exp(-2.0 * std::max(x, 0.0) / width);
      const double bump_tail = std::abs(bump_height) * 0.5 * std::sqrt(M_PI) * bump_width *
                               std::erfc((x - bump_center) / bump_width);
      return step_tail + bump_tail;
    }
    case PotentialKind::Custom: {
      const double edge = pieces.empty() ? 0.0 : pieces.back().x_end;
      if (x >= edge) {
        if (std::isinf(decay_mu)) return 0.0;
        if (decay_mu <= 1.0) return std::numeric_limits<double>::infinity();
        return decay_M * std::pow(1.0 + std::abs(x), 1.0 - decay_mu) / (decay_mu - 1.0);
      }
      // crude bound inside the declared pieces
      double acc = 0.0;
      const int m = 200;
      const double h = (edge - x) / m;
      for (int i = 0; i < m; ++i) acc += std::abs((*this)(x + (i + 0.5) * h) - v_right) * h;
      return acc + tail_integral_right(edge);
    }
  }
  return 0.0;
}

double Potential::tail_integral_left(double x) const {
  const double dv = v_right - v_left;
  switch (kind) {
    case PotentialKind::PureStep:
      return x <= 0.0 ? 0.0 : std::abs(dv) * x;
    case PotentialKind::SmoothStep:
      return std::abs(dv) * 0.5 * width * std::exp(2.0 * std::min(x, 0.0) / width);
    case PotentialKind::StepPlusBump: {
      const double step_tail =
          std::abs(dv) * 0.5 * width * std::exp(2.0 * std::min(x, 0.0) / width);
      const double bump_tail = std::abs(bump_height) * 0.5 * std::sqrt(M_PI) * bump_width *
                               std::erfc((bump_center - x) / bump_width);
      return step_tail + bump_tail;
    }
    case PotentialKind::Custom: {
      const double edge = pieces.empty() ? 0.0 : pieces.front().x_begin;
      if (x <= edge) {
        if (std::isinf(decay_mu)) return 0.0;
        if (decay_mu <= 1.0) return std::numeric_limits<double>::infinity();
        return decay_M * std::pow(1.0 + std::abs(x), 1.0 - decay_mu) / (decay_mu - 1.0);
      }
      double acc = 0.0;
      const int m = 200;
      const double h = (x - edge) / m;
      for (int i = 0; i < m; ++i) acc += std::abs((*this)(edge + (i + 0.5) * h) - v_left) * h;
      return acc + tail_integral_left(edge);
    }
  }
  return 0.0;
}

void Potential::check_invariants() const {
  if (v_left > v_right) throw std::invalid_argument("potential requires v_left <= v_right");
  // Sample the declared decay bounds on a wide grid.
  const int n = 4001;
  for (int i = 0; i < n; ++i) {
    const double x = -1000.0 + 2000.0 * i / (n - 1);
    const double v = (*this)(x);
    if (!std::isfinite(v)) throw std::invalid_argument("potential profile not finite");
    const double dev = x <= 0.0 ? std::abs(v - v_left) : std::abs(v - v_right);
    double bound;
    if (std::isinf(decay_mu)) {
      // exact asymptotics outside the breakpoint span
      const auto bps = breakpoints();
      const double lo = bps.empty() ? 0.0 : bps.front();
      const double hi = bps.empty() ? 0.0 : bps.back();
      if (x < lo || x > hi) {
        if (dev > 0.0) throw std::invalid_argument("declared exact asymptotics violated");
      }
      continue;
    } else {
      bound = decay_M * std::pow(1.0 + std::abs(x), -decay_mu);
    }
    if (dev > bound * (1.0 + 1e-12) + 1e-300)
      throw std::invalid_argument("declared decay bound violated at x=" + format_g17(x));
  }
}

namespace {

// Smallest M such that |V - V_asym| <= M (1+|x|)^{-mu} on the sampled range,
// with a little headroom.
double fitted_decay_constant(const Potential& p, double mu) {
  double m = 0.0;
  const int n = 4001;
  for (int i = 0; i < n; ++i) {
    const double x = -1000.0 + 2000.0 * i / (n - 1);
    const double dev = x <= 0.0 ? std::abs(p(x) - p.v_left) : std::abs(p(x) - p.v_right);
    m = std::max(m, dev * std::pow(1.0 + std::abs(x), mu));
  }
  return m * 1.05 + 1e-300;
}

}  // namespace

Potential make_pure_step(double v_left, double v_right) {
  if (v_left > v_right) throw std::invalid_argument("make_pure_step: v_left > v_right");
  Potential p;
  p.kind = PotentialKind::PureStep;
  p.v_left = v_left;
  p.v_right = v_right;
  p.decay_mu = std::numeric_limits<double>::infinity();
  p.decay_M = 0.0;
  return p;
}

Potential make_smooth_step(double v_left, double v_right, double width) {
  if (v_left > v_right) throw std::invalid_argument("make_smooth_step: v_left > v_right");
  if (!(width > 0.0)) throw std::invalid_argument("make_smooth_step: width must be positive");
  Potential p;
  p.kind = PotentialKind::SmoothStep;
  p.v_left = v_left;
  p.v_right = v_right;
  p.width = width;
  // exponential tail dominates any polynomial rate; declare mu = 6
  p.decay_mu = 6.0;
  p.decay_M = fitted_decay_constant(p, p.decay_mu);
  return p;
}

Potential make_step_plus_bump(double v_left, double v_right, double bump_height,
                              double bump_center, double bump_width) {
  if (v_left > v_right) throw std::invalid_argument("make_step_plus_bump: v_left > v_right");
  if (!(bump_width > 0.0))
    throw std::invalid_argument("make_step_plus_bump: bump_width must be positive");
  Potential p;
  p.kind = PotentialKind::StepPlusBump;
  p.v_left = v_left;
  p.v_right = v_right;
  p.width = 1.0;
  p.bump_height = bump_height;
  p.bump_center = bump_center;
  p.bump_width = bump_width;
  p.decay_mu = 6.0;
  p.decay_M = fitted_decay_constant(p, p.decay_mu);
  return p;
}

Potential make_custom(double v_left, double v_right, std::vector<PolyPiece> pieces,
                      double decay_mu, double decay_M) {
  if (v_left > v_right) throw std::invalid_argument("make_custom: v_left > v_right");
  Potential p;
  p.kind = PotentialKind::Custom;
  p.v_left = v_left;
  p.v_right = v_right;
  p.pieces = std::move(pieces);
  p.decay_mu = decay_mu;
  p.decay_M = decay_M;
  for (size_t i = 0; i + 1 < p.pieces.size(); ++i)
    if (p.pieces[i].x_end != p.pieces[i + 1].x_begin)
      throw std::invalid_argument("make_custom: pieces must be contiguous");
  p.check_invariants();
  return p;
}

Potential load_potential_config(const std::string& document) {
  json j;
  try {
    j = json::parse(document);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("potential config parse error: ") + e.what());
  }
  return [&]() -> Potential {
    try {
      const auto kind = potential_kind_from_string(j.at("kind").get<std::string>());
      const double vl = j.at("v_left").get<double>();
      const double vr = j.at("v_right").get<double>();
      if (vl > vr) throw ConfigError("potential config: v_left > v_right");
      switch (kind) {
        case PotentialKind::PureStep:
          return make_pure_step(vl, vr);
        case PotentialKind::SmoothStep:
          return make_smooth_step(vl, vr, j.at("width").get<double>());
        case PotentialKind::StepPlusBump:
          return make_step_plus_bump(vl, vr, j.at("bump_height").get<double>(),
                                     j.at("bump_center").get<double>(),
                                     j.at("bump_width").get<double>());
        case PotentialKind::Custom: {
          if (!j.contains("decay_mu") || !j.contains("decay_M"))
            throw ConfigError("custom potential requires explicit decay_mu and decay_M");
          std::vector<PolyPiece> pieces;
          for (const auto& pj : j.at("pieces")) {
            PolyPiece pc;
            pc.x_begin = pj.at("x_begin").get<double>();
            pc.x_end = pj.at("x_end").get<double>();
            pc.coeffs = pj.at("coeffs").get<std::vector<double>>();
            pieces.push_back(std::move(pc));
          }
          return make_custom(vl, vr, std::move(pieces), j.at("decay_mu").get<double>(),
                             j.at("decay_M").get<double>());
        }
      }
      throw ConfigError("unreachable potential kind");
    } catch (const json::exception& e) {
      throw ConfigError(std::string("potential config schema error: ") + e.what());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("potential config invalid: ") + e.what());
    }
  }();
}

std::string serialize_potential(const Potential& p) {
  json j;
  j["kind"] = to_string(p.kind);
  j["v_left"] = p.v_left;
  j["v_right"] = p.v_right;
  switch (p.kind) {
    case PotentialKind::PureStep:
      break;
    case PotentialKind::SmoothStep:
      j["width"] = p.width;
      break;
    case PotentialKind::StepPlusBump:
      j["width"] = p.width;
      j["bump_height"] = p.bump_height;
      j["bump_center"] = p.bump_center;
      j["bump_width"] = p.bump_width;
      break;
    case PotentialKind::Custom: {
      j["decay_mu"] = p.decay_mu;
      j["decay_M"] = p.decay_M;
      json pieces = json::array();
      for (const auto& pc : p.pieces) {
        json pj;
        pj["x_begin"] = pc.x_begin;
        pj["x_end"] = pc.x_end;
        pj["coeffs"] = pc.coeffs;
        pieces.push_back(pj);
      }
      j["pieces"] = pieces;
      break;
    }
  }
  return j.dump(2);
}

}  // namespace stepdelay
