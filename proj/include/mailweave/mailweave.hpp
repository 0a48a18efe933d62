#pragma once

#include "mailweave/address.hpp"
#include "mailweave/analytics.hpp"
#include "mailweave/date.hpp"
#include "mailweave/dsl.hpp"
#include "mailweave/error.hpp"
#include "mailweave/export.hpp"
#include "mailweave/facts.hpp"
#include "mailweave/graph.hpp"
#include "mailweave/identity.hpp"
#include "mailweave/ingest.hpp"
#include "mailweave/message.hpp"
#include "mailweave/model.hpp"
#include "mailweave/pipeline.hpp"
#include "mailweave/query.hpp"
#include "mailweave/record_xml.hpp"
#include "mailweave/result_table.hpp"
#include "mailweave/temporal.hpp"
#include "mailweave/text.hpp"
#include "mailweave/threads.hpp"
#include "mailweave/warehouse.hpp"
#include "mailweave/xml.hpp"
