#pragma once

#include "channel.hpp"
#include "detection.hpp"
#include "errors.hpp"
#include "gradient.hpp"
#include "simulate.hpp"
#include "tradeoff.hpp"
