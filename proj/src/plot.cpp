#include "inkwell/plot.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <sstream>

#include <fftw3.h>

#include "inkwell/dataset_io.hpp"
#include "inkwell/errors.hpp"

namespace inkwell {

PlotKind parse_plot_kind(std::string_view name) {
  if (name == "signals") return PlotKind::Signals;
  if (name == "residuals") return PlotKind::Residuals;
  if (name == "spectra") return PlotKind::Spectra;
  throw ValidationError("unknown plot kind '" + std::string(name) +
                        "' (expected signals, residuals or spectra)");
}

Spectrum magnitude_spectrum(const Signal& s, std::size_t padded) {
  if (padded < s.size() || padded < 2) throw ValidationError("FFT size must cover the signal");
  std::vector<double> in(padded, 0.0);
  std::copy(s.samples.begin(), s.samples.end(), in.begin());
  const std::size_t bins = padded / 2 + 1;
  std::vector<std::complex<double>> out(bins);
  fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(padded), in.data(),
                                        reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);

  Spectrum sp;
  sp.frequency.resize(bins);
  sp.magnitude.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    sp.frequency[k] = static_cast<double>(k) / (static_cast<double>(padded) * s.dt);
    sp.magnitude[k] = std::abs(out[k]);
  }
  return sp;
}

Spectrum mean_spectrum(const std::vector<Signal>& signals, std::size_t padded) {
  Spectrum mean;
  for (const Signal& s : signals) {
    const Spectrum sp = magnitude_spectrum(s, padded);
    if (mean.frequency.empty()) {
      mean = sp;
    } else {
      for (std::size_t k = 0; k < sp.magnitude.size(); ++k) mean.magnitude[k] += sp.magnitude[k];
    }
  }
  for (double& m : mean.magnitude) m /= static_cast<double>(signals.size());
  return mean;
}

double peak_frequency(const Spectrum& s) {
  if (s.magnitude.size() < 2) return 0.0;
  const auto it = std::max_element(s.magnitude.begin() + 1, s.magnitude.end());
  return s.frequency[static_cast<std::size_t>(it - s.magnitude.begin())];
}

namespace {

struct Series {
  std::vector<double> x;
  std::vector<double> y;
};

std::string svg_plot(std::string_view title, const std::vector<Series>& series, bool log_y) {
  constexpr double kWidth = 640.0;
  constexpr double kHeight = 360.0;
  constexpr double kMargin = 40.0;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool first = true;
  auto ty = [log_y](double v) { return log_y ? std::log10(std::max(v, 1e-300)) : v; };
  for (const Series& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double y = ty(s.y[i]);
      if (first) {
        x0 = x1 = s.x[i];
        y0 = y1 = y;
        first = false;
      }
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (x1 == x0) x1 = x0 + 1.0;
  if (y1 == y0) y1 = y0 + 1.0;
  static constexpr const char* kColours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kMargin << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << title
     << "</text>\n"
     << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kWidth - 2 * kMargin
     << "\" height=\"" << kHeight - 2 * kMargin << "\" fill=\"none\" stroke=\"#888\"/>\n";
  for (std::size_t j = 0; j < series.size(); ++j) {
    os << "<polyline fill=\"none\" stroke-width=\"1\" stroke=\"" << kColours[j % 5] << "\" points=\"";
    const Series& s = series[j];
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double px = kMargin + (s.x[i] - x0) / (x1 - x0) * (kWidth - 2 * kMargin);
      const double py = kHeight - kMargin - (ty(s.y[i]) - y0) / (y1 - y0) * (kHeight - 2 * kMargin);
      os << (i ? " " : "") << px << ',' << py;
    }
    os << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace

void emit_plot_data(PlotKind kind, const LabeledDataset& ds, const std::filesystem::path& out,
                    const PlotOptions& options) {
  std::map<FaultVariant, std::vector<Series>> groups;
  if (kind == PlotKind::Spectra) {
    for (FaultVariant v : kAllClasses) {
      const std::vector<Signal> signals = ds.signals_of(v);
      if (signals.empty()) continue;
      const std::size_t padded = std::max(options.fft_size, signals.front().size());
      const Spectrum sp = mean_spectrum(signals, padded);
      groups[v].push_back({sp.frequency, sp.magnitude});
    }
  } else {
    for (const auto& e : ds.entries) {
      auto& g = groups[e.label];
      if (g.size() >= options.series_per_class) continue;
      Series s;
      for (std::size_t k = 0; k < e.signal.size(); ++k) {
        s.x.push_back(e.signal.t_a + static_cast<double>(k) * e.signal.dt);
        s.y.push_back(e.signal.samples[k]);
      }
      g.push_back(std::move(s));
    }
  }

  std::ostringstream os;
  os << "class,series,x,value\n";
  for (const auto& [label, series] : groups) {
    for (std::size_t j = 0; j < series.size(); ++j) {
      for (std::size_t i = 0; i < series[j].x.size(); ++i) {
        os << to_string(label) << ',' << j << ',' << format_double(series[j].x[i]) << ','
           << format_double(series[j].y[i]) << '\n';
      }
    }
  }
  write_text_file(out, os.str());

  if (options.svg) {
    for (const auto& [label, series] : groups) {
      std::filesystem::path svg = out;
      svg.replace_filename(out.stem().string() + "_" + std::string(to_string(label)) + ".svg");
      write_text_file(svg, svg_plot(to_string(label), series, kind == PlotKind::Spectra));
    }
  }
}

}  // namespace inkwell
