#pragma once

// Convenience header pulling in the whole library.

#include <amc/channel.hpp>
#include <amc/circuits.hpp>
#include <amc/config.hpp>
#include <amc/costmodel.hpp>
#include <amc/crossbar.hpp>
#include <amc/csv.hpp>
#include <amc/errors.hpp>
#include <amc/linksim.hpp>
#include <amc/modem.hpp>
#include <amc/numerics.hpp>
#include <amc/precoder.hpp>
#include <amc/rng.hpp>
