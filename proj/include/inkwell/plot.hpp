#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "inkwell/simulator.hpp"

namespace inkwell {

enum class PlotKind { Signals, Residuals, Spectra };

// Throws ValidationError for anything but signals, residuals or spectra.
PlotKind parse_plot_kind(std::string_view name);

struct Spectrum {
  std::vector<double> frequency;  // [Hz]
  std::vector<double> magnitude;
};

// |DFT| of the samples zero-padded to `padded` points (>= size), one-sided.
Spectrum magnitude_spectrum(const Signal& s, std::size_t padded);

// Mean magnitude spectrum of a class; frequency of its largest non-DC bin.
Spectrum mean_spectrum(const std::vector<Signal>& signals, std::size_t padded);
double peak_frequency(const Spectrum& s);

struct PlotOptions {
  std::size_t series_per_class = 3;  // signals and residuals kinds
  std::size_t fft_size = 2048;       // spectra kind
  bool svg = false;                  // one `<stem>_<class>.svg` per class next to the CSV
};

// CSV `class,series,x,value`, grouped by class in Healthy..DDN order. x is
// time [s] for signals and residuals, frequency [Hz] for spectra (one mean
// spectrum per class). An empty dataset gives the header only.
void emit_plot_data(PlotKind kind, const LabeledDataset& ds, const std::filesystem::path& out,
                    const PlotOptions& options = {});

}  // namespace inkwell
