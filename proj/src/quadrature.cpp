#include "crmsbm/quadrature.hpp"
