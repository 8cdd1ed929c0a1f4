#pragma once

#include "phyto/clean.hpp"
#include "phyto/dataset.hpp"
#include "phyto/document.hpp"
#include "phyto/encoder.hpp"
#include "phyto/errors.hpp"
#include "phyto/filter.hpp"
#include "phyto/ingest.hpp"
#include "phyto/metrics.hpp"
#include "phyto/train.hpp"
#include "phyto/version.hpp"
