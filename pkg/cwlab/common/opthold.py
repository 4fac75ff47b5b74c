"""
Module containing the OptionContainer class used for experiment configurations
"""
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

import yaml

from cwlab.common.exceptions import ConfigError


class Option(property):
    """
    Base class for descriptors used as pre-defined fields of an `OptionContainer`.

    The descriptors give each container:

    * Tab completion of the field name
    * Assignment time checks of the values
    * Default values at a per `OptionContainer` subclass level
    * Enforcement of a field being required, e.g. no default value is available

    The inheritance from 'property' is needed for IPython introspection to work.
    """

    def __init__(self, docstring, default_value=None, required=False):
        """Initialise an option and passing the docstring"""
        self.__doc__ = docstring
        self.required = required
        self.default_value = default_value
        self.name = None

    def __set_name__(self, owner, name):
        self.name = name

    def __get__(self, obj, owner=None):
        """Get the stored value"""
        if obj is None:
            return self
        if self.required and self.name not in obj._opt_data:
            raise ConfigError(f"Field {self.name} has not been set yet!")

        return obj._opt_data.get(self.name, self.default_value)

    def __set__(self, obj, value):
        obj._opt_data[self.name] = value

    def __delete__(self, obj):
        """Delete the option from the holder dictionary"""
        if self.name in obj._opt_data:
            del obj._opt_data[self.name]


class TypedOption(Option):
    """Class for an option that enforces a specific type"""

    target_type = bool

    def __init__(self, docstring, default_value=None, required=False, enforce_type=False):
        """
        Instantiate a TypedOption field

        If ``enforce_type`` is True, will strictly check the type of the passed value.
        Otherwise, the value will be converted into the target type using the default constructor.
        """
        super().__init__(docstring, default_value, required)
        self.enforce_type = enforce_type

    def __set__(self, obj, value):
        """Setter for setting the option"""
        if value is None:
            obj._opt_data[self.name] = None
            return
        if self.enforce_type:
            if isinstance(value, self.target_type):
                obj._opt_data[self.name] = value
            else:
                raise ConfigError(f"{value!r} is not a {self.target_type.__name__} for option '{self.name}'")
        else:
            try:
                obj._opt_data[self.name] = self.target_type(value)
            except (TypeError, ValueError) as error:
                raise ConfigError(f"Cannot convert {value!r} for option '{self.name}': {error}") from error

    def __get__(self, obj, owner=None):
        if obj is None:
            return self

        raw_value = super().__get__(obj, owner)
        if raw_value is not None:
            return self.target_type(raw_value)
        return None


class ChoiceOption(Option):
    """Option that only allow certain values"""

    def __init__(self, docstring, choices, default_value=None, required=False):
        super().__init__(docstring, default_value, required)
        self.choices = choices

    def __set__(self, obj, value):
        if value not in self.choices:
            raise ConfigError(f"{value} is not a valid choice for '{self.name}', choose from: {self.choices}.")
        obj._opt_data[self.name] = value


class BoundedOption(TypedOption):
    """Numerical option with optional inclusive bounds"""

    def __init__(self, docstring, default_value=None, required=False, minimum=None, maximum=None):
        super().__init__(docstring, default_value, required, enforce_type=False)
        self.minimum = minimum
        self.maximum = maximum

    def __set__(self, obj, value):
        super().__set__(obj, value)
        stored = obj._opt_data[self.name]
        if stored is None:
            return
        if self.minimum is not None and stored < self.minimum:
            raise ConfigError(f"Option '{self.name}' must be >= {self.minimum}, got {stored}")
        if self.maximum is not None and stored > self.maximum:
            raise ConfigError(f"Option '{self.name}' must be <= {self.maximum}, got {stored}")


class FloatOption(BoundedOption):
    """Class for an option that accepts float values"""

    target_type = float


class IntOption(BoundedOption):
    """Class for an option that accepts integer values"""

    target_type = int

    def __set__(self, obj, value):
        # Refuse silent truncation of 2.5 -> 2
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"Option '{self.name}' expects an integer, got {value}")
        super().__set__(obj, value)


class ListOption(TypedOption):
    """Class for an option that accepts a list"""

    target_type = list


class StringOption(TypedOption):
    """Class for an option that accepts only string values"""

    target_type = str

    def __init__(self, docstring, default_value=None, required=False, enforce_type=True):
        """Instantiate an object, note that we enforce_type by default here."""
        super().__init__(
            docstring,
            default_value=default_value,
            required=required,
            enforce_type=enforce_type,
        )


class OptionContainer:
    """
    Base class for a container of options
    """

    def __init__(self, **kwargs):
        """
        A holder of options

        Arguments:
            kwargs: unpack keyword arguments and set them as the attributes
        """
        self._opt_data = dict()

        (
            self.valid_options,
            self.required_options,
        ) = self._get_valid_and_required_options()
        for key, value in kwargs.items():
            if key in self.valid_options:
                setattr(self, key, value)
            else:
                raise ConfigError(f"{key} is not a valid option for a {type(self).__name__} instance!")

    @classmethod
    def _get_valid_and_required_options(cls) -> Tuple[List[str], List[str]]:
        """
        Return the valid option names and those that are marked as `required`.

        Options are collected along the MRO so that subclasses inherit fields, in
        definition order.
        """
        options = []
        required = []
        for klass in reversed(cls.__mro__):
            for name, optobj in vars(klass).items():
                if isinstance(optobj, Option) and name not in options:
                    options.append(name)
                    if optobj.required:
                        required.append(name)
        return options, required

    @property
    def _invalid_attributes(self) -> List[str]:
        """Any attribute store inside __dict__ is an invalid option"""
        known = ["_opt_data", "valid_options", "required_options"]
        return [key for key in self.__dict__ if key not in known]

    def to_dict(self, check_invalids=True, full=False) -> Dict[str, Any]:
        """
        Return a python dict representation

        Arguments:
            check_invalids: Raise if stray attributes have been set on the instance.
            full: Include options whose value is None, making every default explicit.
        """
        invalid_attrs = self._invalid_attributes
        if check_invalids and invalid_attrs:
            raise ConfigError(f"The following attributes are not valid options: {invalid_attrs}")

        outdict = {}
        for key in self.valid_options:
            value = getattr(self, key)
            # 'None' means the option is absent unless a full dump is requested
            if value is not None or full:
                outdict[key] = value
        return outdict

    def __setitem__(self, key, value) -> None:
        if key not in self.valid_options:
            raise KeyError(f"{key} is not an valid option for a {type(self).__name__} instance.")
        setattr(self, key, value)

    def __getitem__(self, key):
        return getattr(self, key)

    def __eq__(self, other) -> bool:
        if type(other) is not type(self):
            return NotImplemented
        return self.to_dict(full=True) == other.to_dict(full=True)

    def to_string(self) -> str:
        """In string format"""
        return repr(self.to_dict(check_invalids=False))

    def __repr__(self):
        string = self.to_string().replace("\n", " ").strip()
        if len(string) > 60:
            string = string[:60] + "..."
        return f"{type(self).__name__}<{string}>"

    def update(self, values: Dict[str, Any], skip_none=True) -> "OptionContainer":
        """Set several options at once, values of None are skipped by default"""
        for key, value in values.items():
            if value is None and skip_none:
                continue
            self[key] = value
        return self

    @classmethod
    def validate_dict(cls, input_dict: Dict[str, Any]) -> None:
        """
        Validate a dictionary, raising ConfigError on unknown keys, missing
        required keys or values that cannot be assigned.
        """
        all_options, required = cls._get_valid_and_required_options()
        for key in input_dict:
            if key not in all_options:
                raise ConfigError(f"Key '{key}' is not a valid option")

        missing = [key for key in required if key not in input_dict]
        if missing:
            raise ConfigError(f"There are missing options: {missing}")

        obj = cls(**input_dict)
        obj.to_dict()

    def to_yaml(self, path: Union[str, Path, None] = None) -> str:
        """Dump all options, defaults included, as YAML; optionally write to a file"""
        text = yaml.dump(self.to_dict(full=True), Dumper=yaml.SafeDumper, sort_keys=False)
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_yaml(cls, source: Union[str, Path]) -> "OptionContainer":
        """Load options from a YAML file path or a YAML string"""
        path = Path(source) if not isinstance(source, str) or "\n" not in source else None
        if path is not None and path.is_file():
            with open(path) as fhd:
                data = yaml.load(fhd, Loader=yaml.SafeLoader)
        else:
            data = yaml.load(str(source), Loader=yaml.SafeLoader)
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(f"Configuration must be a mapping, got {type(data).__name__}")
        return cls(**data)

    @classmethod
    def get_description(cls) -> str:
        """
        Return a string for the options of a OptionContainer in a human-readable format.
        """
        options, required = cls._get_valid_and_required_options()
        entries = []
        for name in options:
            optobj = getattr(cls, name)
            if name not in required:
                value = optobj.default_value
                entries.append((name, optobj.__doc__, type(value).__name__, repr(value)))
            else:
                entries.append((name, optobj.__doc__, "Undefined", "None (required)"))

        width = max(len(entry[0]) for entry in entries) + 2
        template = "{name:>{width}s}:  {doc}\n{label:>{width2}s}: {default} [{kind}]"
        lines = [
            template.format(name=name, doc=doc or "", kind=kind, default=default, label="Default", width=width, width2=width + 10)
            for name, doc, kind, default in entries
        ]
        return "\n".join(lines)
