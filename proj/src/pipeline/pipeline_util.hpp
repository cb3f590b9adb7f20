#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>

#include "gamescope/config.hpp"
#include "gamescope/diagnostics.hpp"
#include "gamescope/params.hpp"

namespace gamescope::pipeline {

/// Opens `path` for binary writing and runs `body`; Error on I/O failure.
void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body);

/// Segment name, with an index for multi-entry segments.
std::string coordinate_name(const Layout& layout, Eigen::Index i);

/// grid.a, grid.b and grid.points over the defaults.
diagnostics::Grid read_grid(const io::Config& cfg);

/// k, eps_stat and eps_eig over the defaults in `opts`.
void read_classify(const io::Config& cfg, diagnostics::ClassifyOptions& opts);

}  // namespace gamescope::pipeline
