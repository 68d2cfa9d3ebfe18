#include "tlswim/linear_solve.hpp"

namespace tlswim::linalg {

template class PivotedLu<9>;

}  // namespace tlswim::linalg
