#pragma once

#include "ddt/egz.hpp"
#include "ddt/errors.hpp"
#include "ddt/fingerprint.hpp"
#include "ddt/instance.hpp"
#include "ddt/modsum.hpp"
#include "ddt/tree.hpp"
