#include "pilotwave/fields.hpp"

#include <cmath>

#include <fmt/format.h>

namespace pilotwave {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double coord(std::span<const double> x, std::size_t d) { return d < x.size() ? x[d] : 0.0; }

double at(const std::vector<double>& v, std::size_t d, double fallback) {
  if (v.empty()) return fallback;
  if (v.size() == 1) return v[0];
  return d < v.size() ? v[d] : fallback;
}

std::vector<double> numbers_arg(const Value& call, std::string_view name, std::size_t index,
                                const std::string& key, std::vector<double> fallback) {
  const Value* a = call.argument(name, index);
  return a ? as_numbers(*a, key) : fallback;
}

double number_arg(const Value& call, std::string_view name, std::size_t index, const std::string& key,
                  double fallback) {
  const Value* a = call.argument(name, index);
  return a ? as_number(*a, key) : fallback;
}

// Smooth step from 0 to 1 around zero.
double smooth_step(double s, double width) { return 0.5 * (1.0 + std::tanh(s / width)); }

std::vector<const Value*> term_list(const Value& v) {
  std::vector<const Value*> out;
  if (v.kind == Value::Kind::list) {
    for (const auto& item : v.items) out.push_back(&item);
  } else {
    out.push_back(&v);
  }
  return out;
}

}  // namespace

double ScalarField::operator()(std::span<const double> x, std::span<const double> masses) const {
  double total = 0.0;
  for (const auto& term : terms_) {
    total += std::visit(
        Overloaded{
            [&](const HarmonicWell& h) {
              double v = 0.0;
              for (std::size_t d = 0; d < x.size(); ++d) {
                double w = at(h.omega, d, 0.0);
                double m = d < masses.size() ? masses[d] : 1.0;
                double dx = x[d] - at(h.center, d, 0.0);
                v += 0.5 * m * w * w * dx * dx;
              }
              return v;
            },
            [&](const LinearRamp& r) {
              double v = 0.0;
              for (std::size_t d = 0; d < x.size(); ++d) v += at(r.slope, d, 0.0) * x[d];
              return v;
            },
            [&](const GaussianBump& g) {
              double r2 = 0.0;
              for (std::size_t d = 0; d < x.size(); ++d) {
                double dx = x[d] - at(g.center, d, 0.0);
                r2 += dx * dx;
              }
              return g.height * std::exp(-0.5 * r2 / (g.width * g.width));
            },
            [&](const DoubleSlitWall& w) {
              double s = coord(x, 0) - w.position;
              double half = 0.5 * w.thickness;
              double across = smooth_step(s + half, w.smoothing) * smooth_step(half - s, w.smoothing);
              double open = 0.0;
              for (double c : w.slits) {
                double t = coord(x, 1) - c;
                double hw = 0.5 * w.slit_width;
                open += smooth_step(t + hw, w.smoothing) * smooth_step(hw - t, w.smoothing);
              }
              return w.height * across * (1.0 - std::min(open, 1.0));
            },
            [&](const QuarticWell& q) {
              double v = 0.0;
              for (std::size_t d = 0; d < x.size(); ++d) v += at(q.lambda, d, 0.0) * std::pow(x[d], 4);
              return v;
            },
        },
        term);
  }
  return total;
}

ScalarField ScalarField::parse(const Value& v, const std::string& key) {
  std::vector<Term> terms;
  for (const Value* t : term_list(v)) {
    if (!t->is_call()) fail_at(*t, key, "potential terms are written name(...)");
    const std::string& name = t->text;
    if (name == "zero") {
      continue;
    } else if (name == "harmonic") {
      terms.emplace_back(HarmonicWell{numbers_arg(*t, "omega", 0, key, {1.0}),
                                      numbers_arg(*t, "center", 1, key, {0.0})});
    } else if (name == "linear") {
      terms.emplace_back(LinearRamp{numbers_arg(*t, "slope", 0, key, {0.0})});
    } else if (name == "gaussian_bump") {
      terms.emplace_back(GaussianBump{number_arg(*t, "height", 0, key, 1.0), numbers_arg(*t, "center", 1, key, {0.0}),
                                      number_arg(*t, "width", 2, key, 1.0)});
    } else if (name == "double_slit") {
      DoubleSlitWall w;
      w.position = number_arg(*t, "position", 99, key, w.position);
      w.thickness = number_arg(*t, "thickness", 99, key, w.thickness);
      w.height = number_arg(*t, "height", 99, key, w.height);
      w.slits = numbers_arg(*t, "slits", 99, key, {-1.0, 1.0});
      w.slit_width = number_arg(*t, "slit_width", 99, key, w.slit_width);
      w.smoothing = number_arg(*t, "smoothing", 99, key, w.smoothing);
      if (w.smoothing <= 0.0) fail_at(*t, key, "double_slit smoothing must be positive");
      terms.emplace_back(w);
    } else if (name == "quartic") {
      terms.emplace_back(QuarticWell{numbers_arg(*t, "lambda", 0, key, {0.0})});
    } else {
      fail_at(*t, key, "unknown potential family '" + name + "'");
    }
  }
  return ScalarField(std::move(terms));
}

std::string ScalarField::describe() const {
  std::string out;
  for (const auto& term : terms_) {
    if (!out.empty()) out += " + ";
    out += std::visit(Overloaded{[](const HarmonicWell&) { return "harmonic"; },
                                 [](const LinearRamp&) { return "linear"; },
                                 [](const GaussianBump&) { return "gaussian_bump"; },
                                 [](const DoubleSlitWall&) { return "double_slit"; },
                                 [](const QuarticWell&) { return "quartic"; }},
                      term);
  }
  return out.empty() ? "zero" : out;
}

Vec3 VectorField::operator()(std::span<const double> x) const {
  Vec3 total{};
  for (const auto& term : terms_) {
    Vec3 v = std::visit(Overloaded{[&](const ConstantVector& c) { return c.value; },
                                   [&](const SymmetricGauge& g) {
                                     return Vec3{-0.5 * g.strength * coord(x, 1), 0.5 * g.strength * coord(x, 0),
                                                 0.0};
                                   },
                                   [&](const GradientField& g) {
                                     return Vec3{0.0, 0.0,
                                                 g.b0 + g.gradient * coord(x, static_cast<std::size_t>(g.axis))};
                                   }},
                        term);
    for (int i = 0; i < 3; ++i) total[i] += v[i];
  }
  return total;
}

bool VectorField::is_uniform() const {
  for (const auto& term : terms_) {
    if (std::holds_alternative<SymmetricGauge>(term)) return false;
    if (const auto* g = std::get_if<GradientField>(&term); g && g->gradient != 0.0) return false;
  }
  return true;
}

VectorField VectorField::parse(const Value& v, const std::string& key) {
  std::vector<Term> terms;
  for (const Value* t : term_list(v)) {
    if (!t->is_call()) fail_at(*t, key, "vector field terms are written name(...)");
    const std::string& name = t->text;
    if (name == "zero") continue;
    if (name == "constant") {
      auto c = numbers_arg(*t, "value", 0, key, {0.0, 0.0, 0.0});
      if (c.size() != 3) fail_at(*t, key, "constant(...) needs a 3-vector");
      terms.emplace_back(ConstantVector{{c[0], c[1], c[2]}});
    } else if (name == "symmetric_gauge") {
      terms.emplace_back(SymmetricGauge{number_arg(*t, "strength", 0, key, 0.0)});
    } else if (name == "gradient") {
      terms.emplace_back(GradientField{number_arg(*t, "b0", 0, key, 0.0), number_arg(*t, "gradient", 1, key, 0.0),
                                       static_cast<int>(number_arg(*t, "axis", 2, key, 0.0))});
    } else {
      fail_at(*t, key, "unknown vector field family '" + name + "'");
    }
  }
  return VectorField(std::move(terms));
}

}  // namespace pilotwave
