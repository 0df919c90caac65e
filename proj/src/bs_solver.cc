#include "groups.hh"

namespace gkp {}
