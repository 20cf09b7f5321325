#pragma once

#include <ostream>

/// Runs the built-in example checks on small grids; prints one line per
/// check and returns true when all pass. Reads and writes no files.
bool run_selftest(std::ostream& out);
