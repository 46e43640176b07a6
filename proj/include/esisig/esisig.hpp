#pragma once

#include "esisig/corpus.hpp"
#include "esisig/denormalize.hpp"
#include "esisig/digest.hpp"
#include "esisig/document.hpp"
#include "esisig/error.hpp"
#include "esisig/esis.hpp"
#include "esisig/events.hpp"
#include "esisig/filter.hpp"
#include "esisig/normalizer.hpp"
#include "esisig/parser.hpp"
#include "esisig/signature_pi.hpp"
#include "esisig/signer.hpp"
#include "esisig/xml_writer.hpp"
