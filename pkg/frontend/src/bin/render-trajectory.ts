#!/usr/bin/env node
import { trajectoryMain } from "../cli.js";

process.exitCode = trajectoryMain(process.argv.slice(2));
