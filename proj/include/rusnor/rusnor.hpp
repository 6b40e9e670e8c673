#pragma once

#include "rusnor/bench.hpp"
#include "rusnor/chat.hpp"
#include "rusnor/coverage.hpp"
#include "rusnor/error.hpp"
#include "rusnor/http_transport.hpp"
#include "rusnor/lexicon.hpp"
#include "rusnor/metric.hpp"
#include "rusnor/prompt.hpp"
#include "rusnor/text.hpp"
#include "rusnor/transducer.hpp"
