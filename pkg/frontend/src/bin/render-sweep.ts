#!/usr/bin/env node
import { sweepMain } from "../cli.js";

process.exitCode = sweepMain(process.argv.slice(2));
