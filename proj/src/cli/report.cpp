#include "pamlab/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <sstream>

#include "pamlab/errors.hpp"

namespace pamlab::report {

namespace {

double field(const std::string& s, std::size_t line) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ConfigError("sweep csv line " + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

std::string num(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// 1, 2 or 5 times a power of ten, giving roughly `target` steps over span.
double nice_step(double span, int target) {
  const double raw = span / target;
  const double p = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * p >= raw) return m * p;
  return 10.0 * p;
}

}  // namespace

std::vector<SweepRow> read_sweep_csv(std::istream& in) {
  std::vector<SweepRow> rows;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line.rfind("kappa,t,replicas,lambda_hat,stderr", 0) != 0)
        throw ConfigError("sweep csv lacks the kappa,t,replicas,lambda_hat,stderr header");
      header = true;
      continue;
    }
    std::vector<std::string> cells;
    std::istringstream is(line);
    for (std::string c; std::getline(is, c, ',');) cells.push_back(c);
    if (cells.size() < 5) throw ConfigError("sweep csv line " + std::to_string(lineno) + " has too few fields");
    rows.push_back({field(cells[0], lineno), field(cells[1], lineno),
                    static_cast<std::size_t>(field(cells[2], lineno)), field(cells[3], lineno),
                    field(cells[4], lineno)});
  }
  if (!header) throw ConfigError("sweep csv is empty");
  return rows;
}

std::string sweep_svg(const SweepPlot& p) {
  const double left = 70.0, right = 20.0, top = 40.0, bottom = 55.0;
  const double w = p.width - left - right;
  const double h = p.height - top - bottom;

  std::vector<SweepRow> rows;
  for (const auto& r : p.rows)
    if (std::isfinite(r.lambda_hat)) rows.push_back(r);

  double kmax = 1.0;
  double ylo = p.env_mean;
  double yhi = p.env_mean;
  for (const auto& r : rows) {
    kmax = std::max(kmax, r.kappa);
    const double e = std::isfinite(r.stderr_) ? 1.96 * r.stderr_ : 0.0;
    ylo = std::min(ylo, r.lambda_hat - e);
    yhi = std::max(yhi, r.lambda_hat + e);
  }
  if (yhi - ylo < 1e-9) {
    ylo -= 0.5;
    yhi += 0.5;
  }
  const double pad = 0.08 * (yhi - ylo);
  ylo -= pad;
  yhi += pad;
  const double xmax = std::log10(1.0 + kmax);
  auto X = [&](double kappa) { return left + w * std::log10(1.0 + kappa) / xmax; };
  auto Y = [&](double v) { return top + h * (yhi - v) / (yhi - ylo); };

  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s << "<!-- pamlab report config_hash=" << xml_escape(p.config_hash) << " seed=" << p.seed
    << " source_config_hash=" << xml_escape(p.source) << " -->\n";
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << p.width << "\" height=\"" << p.height
    << "\" viewBox=\"0 0 " << p.width << ' ' << p.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << num(left + w / 2, 1) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
    << "Quenched Lyapunov exponent estimate against diffusion constant</text>\n";

  // axes and grid
  s << "<g stroke=\"#cccccc\" stroke-width=\"1\">\n";
  const double ystep = nice_step(yhi - ylo, 6);
  std::vector<double> yticks;
  for (double v = std::ceil(ylo / ystep) * ystep; v <= yhi + 1e-12; v += ystep) yticks.push_back(v);
  for (double v : yticks)
    s << "<line x1=\"" << num(left) << "\" x2=\"" << num(left + w) << "\" y1=\"" << num(Y(v)) << "\" y2=\""
      << num(Y(v)) << "\"/>\n";
  std::vector<double> xticks{0.0};
  for (double k = 1.0; k <= kmax * 1.0000001; k *= 10.0) xticks.push_back(k);
  for (double k : xticks)
    s << "<line x1=\"" << num(X(k)) << "\" x2=\"" << num(X(k)) << "\" y1=\"" << num(top) << "\" y2=\""
      << num(top + h) << "\"/>\n";
  s << "</g>\n";
  s << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(w) << "\" height=\"" << num(h)
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  const int ydigits = std::max(0, static_cast<int>(-std::floor(std::log10(ystep))));
  for (double v : yticks)
    s << "<text x=\"" << num(left - 6) << "\" y=\"" << num(Y(v) + 4) << "\" text-anchor=\"end\">"
      << num(std::abs(v) < 1e-12 ? 0.0 : v, ydigits) << "</text>\n";
  for (double k : xticks)
    s << "<text x=\"" << num(X(k)) << "\" y=\"" << num(top + h + 18) << "\" text-anchor=\"middle\">" << num(k, 0)
      << "</text>\n";
  s << "<text x=\"" << num(left + w / 2) << "\" y=\"" << num(p.height - 12.0)
    << "\" text-anchor=\"middle\">kappa (axis log10(1 + kappa))</text>\n";
  s << "<text transform=\"translate(18 " << num(top + h / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
    << "lambda_hat</text>\n";

  // reference line at E xi
  s << "<line x1=\"" << num(left) << "\" x2=\"" << num(left + w) << "\" y1=\"" << num(Y(p.env_mean)) << "\" y2=\""
    << num(Y(p.env_mean)) << "\" stroke=\"#d62728\" stroke-dasharray=\"6 4\" stroke-width=\"1.5\"/>\n";
  s << "<text x=\"" << num(left + w - 4) << "\" y=\"" << num(Y(p.env_mean) - 6)
    << "\" text-anchor=\"end\" fill=\"#d62728\">E xi = " << num(p.env_mean, 4) << "</text>\n";

  // estimates with 95% bars, joined in kappa order
  std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) { return a.kappa < b.kappa; });
  if (rows.size() > 1) {
    s << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < rows.size(); ++i)
      s << (i ? " " : "") << num(X(rows[i].kappa)) << ',' << num(Y(rows[i].lambda_hat));
    s << "\"/>\n";
  }
  s << "<g stroke=\"#1f77b4\" fill=\"#1f77b4\">\n";
  for (const auto& r : rows) {
    const double e = std::isfinite(r.stderr_) ? 1.96 * r.stderr_ : 0.0;
    if (e > 0.0)
      s << "<line x1=\"" << num(X(r.kappa)) << "\" x2=\"" << num(X(r.kappa)) << "\" y1=\"" << num(Y(r.lambda_hat - e))
        << "\" y2=\"" << num(Y(r.lambda_hat + e)) << "\"/>\n";
    s << "<circle cx=\"" << num(X(r.kappa)) << "\" cy=\"" << num(Y(r.lambda_hat)) << "\" r=\"3\"/>\n";
  }
  s << "</g>\n</svg>\n";
  return s.str();
}

}  // namespace pamlab::report
