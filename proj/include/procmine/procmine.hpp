#pragma once

// Everything except the HTTP service (procmine/serve.hpp), which pulls in httplib.

#include "procmine/classifier.hpp"
#include "procmine/corpus.hpp"
#include "procmine/error.hpp"
#include "procmine/features.hpp"
#include "procmine/flow.hpp"
#include "procmine/html.hpp"
#include "procmine/ingest.hpp"
#include "procmine/lexicon.hpp"
#include "procmine/linguistics.hpp"
#include "procmine/pipeline.hpp"
#include "procmine/random.hpp"
#include "procmine/search.hpp"
#include "procmine/svm.hpp"
#include "procmine/text.hpp"
