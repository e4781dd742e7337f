#pragma once

#include "fem/numkit.hpp"
#include "fem/params.hpp"
#include "fem/kan.hpp"
#include "fem/mlp.hpp"
#include "fem/train.hpp"
#include "fem/protect.hpp"
#include "fem/simbench.hpp"
#include "fem/store.hpp"
