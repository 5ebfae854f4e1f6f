#include "koopgait/optim.hpp"
