#pragma once

#include "fontimp/corpus.hpp"
#include "fontimp/error.hpp"
#include "fontimp/estimator.hpp"
#include "fontimp/exemplar.hpp"
#include "fontimp/io.hpp"
#include "fontimp/metrics.hpp"
#include "fontimp/simulate.hpp"
#include "fontimp/vocab.hpp"
