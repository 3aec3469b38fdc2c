#pragma once

#include "upquant/algebra.hpp"
#include "upquant/arith.hpp"
#include "upquant/channel.hpp"
#include "upquant/errors.hpp"
#include "upquant/io.hpp"
#include "upquant/rational.hpp"
#include "upquant/reduce.hpp"
#include "upquant/verify.hpp"
