#pragma once

#include <string>

#include "eit3d/calderon.hpp"
#include "eit3d/dbar.hpp"
#include "eit3d/dnmap.hpp"
#include "eit3d/forward.hpp"
#include "eit3d/geometry.hpp"
#include "eit3d/metrics.hpp"
#include "eit3d/phantom.hpp"

namespace eit3d::io {

// Electrode layout: structured text (unit center vectors + radii).
void save_layout(const geom::ElectrodeLayout& lay, const std::string& path);
geom::ElectrodeLayout load_layout(const std::string& path);

// Voltage matrix: structured-text header (L, K, protocol, amplitude, eta,
// seed, layout hash) + full-precision decimal body, column-major. The reader
// validates the column count.
void save_voltages(const forward::VoltageMatrix& v, const std::string& path);
forward::VoltageMatrix load_voltages(const std::string& path);

// Volume: text header (grid spec, domain radius, field names, config hash,
// optional single-line parameter echo) followed by little-endian float64
// body, real field then imaginary field, k fastest.
void save_volume(const phantom::VolumeGrid& g, const std::string& path,
                 std::uint64_t config_hash = 0, const std::string& params = "");
phantom::VolumeGrid load_volume(const std::string& path, std::uint64_t* config_hash = nullptr,
                                std::string* params = nullptr);

// Numeric text dump of the discrete map factors (Q, S, R, Lmat) for debugging.
void dump_dnmap(const dnmap::DiscreteDNMap& map, const std::string& path_prefix);

// Scattering volumes (grid spec + complex samples), same header style.
void save_fourier_cartesian(const dbar::FourierVolume& t, const std::string& path);
dbar::FourierVolume load_fourier_cartesian(const std::string& path);
void save_fourier_spherical(const calderon::SphericalZGrid& f, const std::string& path);
calderon::SphericalZGrid load_fourier_spherical(const std::string& path);

// Center-plane slice images (x1x2, x1x3, x2x3) of one scalar channel as
// binary PPM with a symmetric diverging color scale about `center`; the
// limits go to a text sidecar next to each image.
void save_slices(const phantom::VolumeGrid& g, bool imag_part, double center,
                 const std::string& path_prefix);

// Metrics report as structured text, one labelled record per target class.
void save_report(const metrics::MetricsReport& rep, const std::string& path);
std::string format_report(const metrics::MetricsReport& rep);

// Atomic write helper: write to <path>.tmp then rename.
void atomic_write_text(const std::string& path, const std::string& content);

}  // namespace eit3d::io
