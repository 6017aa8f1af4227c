/** Typed errors; the CLI prints the class name so callers can dispatch on it. */

export class ExtractorError extends Error {
  constructor(message: string) {
    super(message);
    this.name = new.target.name;
  }
}

export class UnsupportedDtype extends ExtractorError {}
export class BadMagic extends ExtractorError {}
export class HeaderParse extends ExtractorError {}
export class TruncatedData extends ExtractorError {}
export class BadImage extends ExtractorError {}
export class BackboneUnavailable extends ExtractorError {}
export class MalformedRequest extends ExtractorError {}
export class InvalidBlocks extends ExtractorError {}
