#pragma once

#include <string>
#include <string_view>

namespace embir {

/// Classic Porter (1980) stemmer over lowercase ASCII words. Words containing
/// anything other than a-z are returned unchanged.
std::string porter_stem(std::string_view word);

}  // namespace embir
