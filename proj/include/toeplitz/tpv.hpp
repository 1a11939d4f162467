#ifndef TOEPLITZ_TPV_HPP
#define TOEPLITZ_TPV_HPP

#include <string>

#include "toeplitz/words.hpp"

namespace toeplitz {

/// TPV1 pair file: deterministic JSON rendering, byte-exact round trip.
/// Levels use "plain" (literal string over 01?) or "rle" ([symbol, run] pairs),
/// chosen by a fixed rule (whichever is smaller), so identical pairs always
/// serialize to identical bytes.
std::string tpvToString(const ViablePair& pair);
ViablePair tpvFromString(const std::string& text);

void tpvSave(const ViablePair& pair, const std::string& path);
ViablePair tpvLoad(const std::string& path);

}  // namespace toeplitz

#endif
